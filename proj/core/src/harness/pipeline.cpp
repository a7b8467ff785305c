#include "mesh/harness/pipeline.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace mesh::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string PipelineConfig::to_json() const {
  const json j = {{"layout", layout},
                  {"strategies", strategies},
                  {"teams_per_strategy", teams_per_strategy},
                  {"demo_len", demo_len},
                  {"demo_seed", demo_seed},
                  {"n_range", n_range},
                  {"k_range", k_range},
                  {"recognition_seed", recognition_seed},
                  {"train_on_planted", train_on_planted},
                  {"budget", budget},
                  {"irl_iters", irl_iters},
                  {"train_seed", train_seed},
                  {"games", games},
                  {"eval_len", eval_len},
                  {"eval_seed", eval_seed},
                  {"moe_gamma", moe_gamma}};
  return j.dump();
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  PipelineConfig c;
  static const std::vector<std::string> known = {
      "layout",  "strategies", "teams_per_strategy", "demo_len",   "demo_seed", "n_range",  "k_range",  "recognition_seed",
      "train_on_planted", "budget", "irl_iters", "train_seed", "games", "eval_len", "eval_seed", "moe_gamma"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("pipeline config: unknown key '" + key + "'");
    }
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("layout", c.layout);
  get("strategies", c.strategies);
  get("teams_per_strategy", c.teams_per_strategy);
  get("demo_len", c.demo_len);
  get("demo_seed", c.demo_seed);
  get("n_range", c.n_range);
  get("k_range", c.k_range);
  get("recognition_seed", c.recognition_seed);
  get("train_on_planted", c.train_on_planted);
  get("budget", c.budget);
  get("irl_iters", c.irl_iters);
  get("train_seed", c.train_seed);
  get("games", c.games);
  get("eval_len", c.eval_len);
  get("eval_seed", c.eval_seed);
  get("moe_gamma", c.moe_gamma);
  return c;
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

PipelineError::PipelineError(std::string stage, const std::string& what)
    : std::runtime_error("pipeline stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

namespace {

class Status {
 public:
  Status(fs::path path, std::string hash) : path_(std::move(path)), hash_(std::move(hash)) {
    for (const auto& s : kPipelineStages) stages_[s] = "pending";
  }

  void load() {
    std::ifstream in(path_);
    const json j = json::parse(in);
    for (const auto& s : kPipelineStages) stages_[s] = j.at("stages").value(s, "pending");
  }
  bool complete(const std::string& stage) const { return stages_.at(stage) == "complete"; }
  void set(const std::string& stage, const std::string& value) {
    stages_[stage] = value;
    save();
  }
  void save() const {
    json st = json::object();
    bool all = true;
    for (const auto& s : kPipelineStages) {
      st[s] = stages_.at(s);
      all = all && stages_.at(s) == "complete";
    }
    const json j = {{"config_hash", hash_}, {"stages", st}, {"complete", all}};
    std::ofstream out(path_);
    out << j.dump(1) << '\n';
  }

 private:
  fs::path path_;
  std::string hash_;
  std::map<std::string, std::string> stages_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

// Adds the hash to a JSON document produced by one of the writers.
std::string with_hash(const std::string& doc, const std::string& hash) {
  json j = json::parse(doc);
  j["config_hash"] = hash;
  return j.dump() + "\n";
}

void check_hash(const json& j, const std::string& hash, const fs::path& p) {
  if (j.value("config_hash", "") != hash) throw std::runtime_error(p.string() + " was written under another config");
}

template <typename F>
void stage(const std::string& name, Status& status, PipelineSummary& summary, std::ostream* log, F&& body) {
  if (log) *log << "[" << name << "] running\n" << std::flush;
  status.set(name, "incomplete");
  try {
    body();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
  status.set(name, "complete");
  summary.stages_run.push_back(name);
  if (log) *log << "[" << name << "] complete\n" << std::flush;
}

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& config, const fs::path& dir, const PipelineOptions& options) {
  const std::string hash = config.hash();
  std::ostream* log = options.log;
  if (!kitchen::has_builtin_layout(config.layout)) {
    throw PipelineError("config", "unknown layout '" + config.layout + "'");
  }
  const kitchen::Layout layout = kitchen::builtin_layout(config.layout);
  fs::create_directories(dir);
  const fs::path config_path = dir / "config.json";
  const fs::path status_path = dir / "status.json";

  Status status(status_path, hash);
  if (fs::exists(status_path) && !options.force) {
    const json old = json::parse(read_file(status_path));
    const std::string old_hash = old.value("config_hash", "");
    if (old_hash != hash) {
      throw PipelineError("resume", "directory " + dir.string() + " holds a run with config hash " + old_hash +
                                        " but this config hashes to " + hash +
                                        "; use a fresh directory or force a rerun");
    }
    status.load();
  } else {
    status.save();
  }
  {
    json c = json::parse(config.to_json());
    write_file(config_path, json{{"config", c}, {"config_hash", hash}}.dump(1) + "\n");
  }

  PipelineSummary summary;
  summary.config_hash = hash;

  // generate
  DemoSet demos;
  const fs::path demo_dir = dir / "demos";
  const fs::path planted_path = dir / "planted.json";
  const fs::path dataset_path = dir / "dataset.jsonl";
  if (status.complete("generate")) {
    const json planted = json::parse(read_file(planted_path));
    check_hash(planted, hash, planted_path);
    demos.strategy_names = planted.at("strategies").get<std::vector<std::string>>();
    for (const auto& t : planted.at("teams")) {
      std::ifstream in(demo_dir / (t.at("team_id").get<std::string>() + ".log"));
      demos.rollouts.push_back(kitchen::read_trajectory_log(in, layout));
      demos.planted.push_back(t.at("strategy").get<int>());
    }
  } else {
    stage("generate", status, summary, log, [&] {
      std::vector<ScriptedStrategy> strategies;
      for (const auto& n : config.strategies) strategies.push_back(builtin_strategy(n));
      demos = generate_demos(layout, strategies, config.teams_per_strategy, config.demo_len, config.demo_seed);
      fs::create_directories(demo_dir);
      json teams = json::array();
      for (std::size_t i = 0; i < demos.rollouts.size(); ++i) {
        std::ofstream out(demo_dir / (demos.rollouts[i].team_id + ".log"));
        kitchen::write_trajectory_log(out, layout, demos.rollouts[i], hash);
        teams.push_back({{"team_id", demos.rollouts[i].team_id}, {"strategy", demos.planted[i]}});
      }
      // Ground truth for scoring only; recognition reads dataset.jsonl.
      write_file(planted_path,
                 json{{"config_hash", hash}, {"strategies", demos.strategy_names}, {"teams", teams}}.dump(1) + "\n");
      std::ostringstream ds;
      ds << json{{"config_hash", hash}}.dump() << '\n';
      recognition::write_dataset(ds, annotate_all(layout, demos));
      write_file(dataset_path, ds.str());
    });
  }

  // recognize
  const fs::path model_path = dir / "recognition.json";
  recognition::RecognitionModel model;
  if (status.complete("recognize")) {
    const std::string text = read_file(model_path);
    check_hash(json::parse(text), hash, model_path);
    std::istringstream in(text);
    model = recognition::read_model(in);
  } else {
    stage("recognize", status, summary, log, [&] {
      std::ifstream in(dataset_path);
      const auto dataset = recognition::read_dataset(in);
      const std::set<int> ns(config.n_range.begin(), config.n_range.end());
      const std::set<int> ks(config.k_range.begin(), config.k_range.end());
      model.seed = config.recognition_seed;
      model.n_range = config.n_range;
      model.k_range = config.k_range;
      model.result = recognition::grid_search(dataset, ns, ks, config.recognition_seed);
      std::ostringstream out;
      recognition::write_model(out, model);
      write_file(model_path, with_hash(out.str(), hash));
    });
  }
  const auto& assignment = model.result.assignment;
  summary.recognized_k = assignment.k;
  summary.chosen_n = assignment.chosen_n;
  summary.silhouette = assignment.silhouette;
  {
    std::vector<int> found, truth;
    for (std::size_t i = 0; i < demos.rollouts.size(); ++i) {
      const auto it = assignment.labels.find(demos.rollouts[i].team_id);
      if (it == assignment.labels.end()) continue;
      found.push_back(it->second);
      truth.push_back(demos.planted[i]);
    }
    summary.ari_vs_planted = recognition::adjusted_rand_index(found, truth);
  }

  // train
  const fs::path library_path = dir / "library.json";
  auto library = std::make_shared<learning::PolicyLibrary>();
  if (status.complete("train")) {
    const std::string text = read_file(library_path);
    check_hash(json::parse(text), hash, library_path);
    std::istringstream in(text);
    *library = learning::read_library(in);
  } else {
    stage("train", status, summary, log, [&] {
      recognition::StrategyAssignment labels = assignment;
      if (config.train_on_planted) {
        labels.k = static_cast<int>(demos.strategy_names.size());
        labels.labels.clear();
        for (std::size_t i = 0; i < demos.rollouts.size(); ++i) {
          labels.labels[demos.rollouts[i].team_id] = demos.planted[i];
        }
      }
      // Teams recognition dropped (no subtasks) have no cluster and sit out training.
      std::vector<kitchen::Rollout> used;
      for (const auto& r : demos.rollouts) {
        if (labels.labels.contains(r.team_id)) used.push_back(r);
      }
      learning::TrainOptions opts;
      opts.optimize.budget = config.budget;
      opts.irl.iters = config.irl_iters;
      *library = learning::train_library(used, labels, layout, config.train_seed, opts);
      std::ostringstream out;
      learning::write_library(out, *library);
      write_file(library_path, with_hash(out.str(), hash));
    });
  }

  // evaluate; always rerun, it is the cheapest stage and produces the report
  stage("evaluate", status, summary, log, [&] {
    EvaluationRequest req;
    req.agents = {AgentSpec::mesh(), AgentSpec::baseline()};
    for (int k = 0; k < library->k(); ++k) req.agents.push_back(AgentSpec::fixed(k));
    for (const auto& n : config.strategies) req.partners.push_back(PartnerSpec::scripted_strategy(builtin_strategy(n)));
    req.partners.push_back(PartnerSpec::aggregate_bc());
    req.games = config.games;
    req.episode_len = config.eval_len;
    req.seed = config.eval_seed;
    req.keep_beliefs = true;
    moe::MoeConfig moe_cfg;
    moe_cfg.gamma = config.moe_gamma;
    summary.report = evaluate(library, layout, req, moe_cfg);

    std::ostringstream csv, js, table, beliefs;
    write_report_csv(csv, summary.report, hash);
    write_report_json(js, summary.report, hash);
    table << "config_hash " << hash << "\n";
    write_report_table(table, summary.report);
    beliefs << json{{"config_hash", hash}}.dump() << '\n';
    for (const auto& cell : summary.report.cells) {
      if (cell.beliefs.empty()) continue;
      for (const auto& rec : cell.beliefs.front()) {
        beliefs << json{{"agent", cell.agent},
                        {"partner", cell.partner},
                        {"seats", cell.swapped ? "SwitchInd" : "Standard"},
                        {"game", 0},
                        {"t", rec.tick},
                        {"w", rec.weights},
                        {"d", rec.disagreements},
                        {"action", kitchen::to_string(rec.action)}}
                       .dump()
                << '\n';
      }
    }
    write_file(dir / "evaluation.csv", csv.str());
    write_file(dir / "evaluation.json", js.str());
    write_file(dir / "orders_table.txt", table.str());
    write_file(dir / "beliefs.jsonl", beliefs.str());
    const json s = {{"config_hash", hash},
                    {"recognized_k", summary.recognized_k},
                    {"chosen_n", summary.chosen_n},
                    {"silhouette", summary.silhouette},
                    {"ari_vs_planted", summary.ari_vs_planted},
                    {"trained_on", config.train_on_planted ? "planted" : "recognized"}};
    write_file(dir / "summary.json", s.dump(1) + "\n");
  });
  return summary;
}

}  // namespace mesh::harness
