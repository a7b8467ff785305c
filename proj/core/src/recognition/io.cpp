#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "mesh/recognition/grid_search.hpp"

namespace mesh::recognition {

using nlohmann::json;

namespace {

json model_to_json(const HmmModel& m) {
  return {{"n_states", m.n_states},
          {"initial", m.initial},
          {"transition", m.transition},
          {"emission", m.emission}};
}

HmmModel model_from_json(const json& j) {
  HmmModel m;
  m.n_states = j.at("n_states").get<int>();
  m.initial = j.at("initial").get<std::vector<double>>();
  m.transition = j.at("transition").get<std::vector<double>>();
  m.emission = j.at("emission").get<std::vector<double>>();
  m.check_stochastic();
  return m;
}

}  // namespace

void write_dataset(std::ostream& out, std::span<const SubtaskTrajectory> dataset) {
  for (const auto& traj : dataset) {
    json symbols = json::array();
    for (Subtask s : traj.symbols) symbols.push_back(kitchen::to_string(s));
    json rec = {{"team_id", traj.team_id}, {"symbols", symbols}, {"players", traj.players}};
    out << rec.dump() << '\n';
  }
}

std::vector<SubtaskTrajectory> read_dataset(std::istream& in) {
  std::vector<SubtaskTrajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = json::parse(line);
    if (!rec.contains("team_id") && rec.contains("config_hash")) continue;  // provenance header
    SubtaskTrajectory t;
    t.team_id = rec.at("team_id").get<std::string>();
    for (const auto& s : rec.at("symbols")) {
      auto sub = kitchen::subtask_from_string(s.get<std::string>());
      if (!sub) throw std::runtime_error("dataset line " + std::to_string(line_no) + ": unknown subtask " + s.dump());
      t.symbols.push_back(*sub);
    }
    if (rec.contains("players")) t.players = rec.at("players").get<std::vector<int>>();
    out.push_back(std::move(t));
  }
  return out;
}

void write_model(std::ostream& out, const RecognitionModel& model) {
  const auto& r = model.result;
  json table = json::array();
  for (const auto& c : r.table) {
    table.push_back({{"n_states", c.n_states},
                     {"k", c.k},
                     {"silhouette", c.silhouette},
                     {"inertia", c.inertia},
                     {"log_likelihood", c.log_likelihood},
                     {"trim_length", c.trim_length}});
  }
  json labels = json::object();
  for (const auto& [team, label] : r.assignment.labels) labels[team] = label;
  json doc = {{"format", "mesh-recognition-1"},
              {"seed", model.seed},
              {"n_range", model.n_range},
              {"k_range", model.k_range},
              {"hmm", model_to_json(r.model)},
              {"assignment",
               {{"k", r.assignment.k},
                {"chosen_n", r.assignment.chosen_n},
                {"trim_length", r.assignment.trim_length},
                {"silhouette", r.assignment.silhouette},
                {"inertia", r.assignment.inertia},
                {"labels", labels},
                {"centroids", r.assignment.centroids}}},
              {"dropped", r.dropped},
              {"fit_trace", r.fit_trace},
              {"score_table", table}};
  out << doc.dump(2) << '\n';
}

RecognitionModel read_model(std::istream& in) {
  const json doc = json::parse(in);
  if (doc.value("format", "") != "mesh-recognition-1") throw std::runtime_error("not a recognition model file");
  RecognitionModel m;
  m.seed = doc.at("seed").get<std::uint64_t>();
  m.n_range = doc.at("n_range").get<std::vector<int>>();
  m.k_range = doc.at("k_range").get<std::vector<int>>();
  m.result.model = model_from_json(doc.at("hmm"));
  const json& a = doc.at("assignment");
  m.result.assignment.k = a.at("k").get<int>();
  m.result.assignment.chosen_n = a.at("chosen_n").get<int>();
  m.result.assignment.trim_length = a.at("trim_length").get<std::size_t>();
  m.result.assignment.silhouette = a.at("silhouette").get<double>();
  m.result.assignment.inertia = a.at("inertia").get<double>();
  m.result.assignment.labels = a.at("labels").get<std::map<std::string, int>>();
  m.result.assignment.centroids = a.at("centroids").get<std::vector<Point>>();
  m.result.dropped = doc.at("dropped").get<std::vector<std::string>>();
  m.result.fit_trace = doc.at("fit_trace").get<std::vector<double>>();
  for (const auto& c : doc.at("score_table")) {
    m.result.table.push_back({c.at("n_states").get<int>(), c.at("k").get<int>(), c.at("silhouette").get<double>(),
                              c.at("inertia").get<double>(), c.at("log_likelihood").get<double>(),
                              c.at("trim_length").get<std::size_t>()});
  }
  return m;
}

}  // namespace mesh::recognition
