#include "mesh/learning/library.hpp"

#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

namespace mesh::learning {

using nlohmann::json;

void PolicyLibrary::check() const {
  if (strategies.size() < 2) throw std::invalid_argument("PolicyLibrary: need at least two strategies");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (strategies[i].cluster != static_cast<int>(i)) {
      throw std::invalid_argument("PolicyLibrary: strategy " + std::to_string(i) + " has cluster " +
                                  std::to_string(strategies[i].cluster));
    }
  }
}

TrainError::TrainError(std::string stage, int cluster, const std::string& what)
    : std::runtime_error("train_library: " + stage + (cluster >= 0 ? " for cluster " + std::to_string(cluster) : "") +
                         ": " + what),
      stage_(std::move(stage)),
      cluster_(cluster) {}

std::vector<Sample> team_samples(const kitchen::Layout& layout, std::span<const kitchen::Rollout> rollouts) {
  auto out = seat_samples(layout, rollouts, 0);
  auto other = seat_samples(layout, rollouts, 1);
  out.insert(out.end(), other.begin(), other.end());
  return out;
}

namespace {

RewardWeights to_weights(const std::vector<double>& v) {
  RewardWeights w{};
  std::copy(v.begin(), v.end(), w.begin());
  return w;
}

// Runs f, rethrowing anything it throws as a TrainError naming the stage.
template <typename F>
auto staged(const std::string& stage, int cluster, F&& f) {
  try {
    return f();
  } catch (const TrainError&) {
    throw;
  } catch (const std::exception& e) {
    throw TrainError(stage, cluster, e.what());
  }
}

}  // namespace

PolicyLibrary train_library(std::span<const kitchen::Rollout> rollouts,
                            const recognition::StrategyAssignment& assignment, const kitchen::Layout& layout,
                            std::uint64_t seed, const TrainOptions& options) {
  if (assignment.k < 2) throw TrainError("partition", -1, "need K >= 2, got " + std::to_string(assignment.k));
  std::vector<std::vector<kitchen::Rollout>> parts(static_cast<std::size_t>(assignment.k));
  std::vector<std::vector<std::string>> teams(parts.size());
  for (const auto& r : rollouts) {
    const auto it = assignment.labels.find(r.team_id);
    if (it == assignment.labels.end()) throw TrainError("partition", -1, "team '" + r.team_id + "' has no cluster");
    if (it->second < 0 || it->second >= assignment.k) {
      throw TrainError("partition", -1, "team '" + r.team_id + "' has cluster " + std::to_string(it->second));
    }
    parts[static_cast<std::size_t>(it->second)].push_back(r);
    teams[static_cast<std::size_t>(it->second)].push_back(r.team_id);
  }
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].empty()) throw TrainError("partition", static_cast<int>(k), "cluster has no teams");
  }

  PolicyLibrary lib;
  lib.layout = layout.name();
  lib.seed = seed;
  const auto all_samples = team_samples(layout, rollouts);
  lib.aggregate_human = staged("behavior cloning", -1, [&] { return behavior_cloning(all_samples, 1); });

  for (std::size_t k = 0; k < parts.size(); ++k) {
    const int c = static_cast<int>(k);
    StrategyPolicy sp;
    sp.cluster = c;
    sp.teams = teams[k];
    sp.seed = mix_seed(seed, k + 1);
    const IrlResult irl = staged("irl", c, [&] { return maxent_irl(parts[k], layout, options.irl); });
    sp.theta = to_weights(irl.theta);
    sp.irl_gap_trace = irl.gap_trace;
    const auto samples = team_samples(layout, parts[k]);
    sp.human = staged("behavior cloning", c,
                      [&] { return behavior_cloning(samples, 1, &lib.aggregate_human, options.finetune_weight); });
    OptimizeOptions opt = options.optimize;
    opt.seed = sp.seed;
    opt.serve_bonus = 0.0;
    const Policy init = Policy::from_bc(sp.human);
    OptimizeResult res = staged("policy optimization", c, [&] {
      return optimize_policy(sp.theta, sp.human, layout, opt, options.warm_start ? &init : nullptr);
    });
    sp.policy = std::move(res.policy);
    sp.reward_trace = std::move(res.reward_trace);
    lib.strategies.push_back(std::move(sp));
  }

  const IrlResult agg = staged("baseline irl", -1, [&] { return maxent_irl(rollouts, layout, options.irl); });
  lib.baseline_theta = to_weights(agg.theta);
  OptimizeOptions opt = options.optimize;
  opt.seed = mix_seed(seed, 0);
  opt.serve_bonus = options.baseline_serve_bonus;
  const Policy init = Policy::from_bc(lib.aggregate_human);
  OptimizeResult res = staged("baseline optimization", -1, [&] {
    return optimize_policy(lib.baseline_theta, lib.aggregate_human, layout, opt, options.warm_start ? &init : nullptr);
  });
  lib.baseline = std::move(res.policy);
  lib.baseline_reward_trace = std::move(res.reward_trace);
  return lib;
}

namespace {

json weights_to_json(const RewardWeights& w) {
  json names = json::array();
  for (const char* n : kitchen::kFeatureNames) names.push_back(n);
  return {{"features", names}, {"values", w}};
}

RewardWeights weights_from_json(const json& j) {
  const auto names = j.at("features").get<std::vector<std::string>>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (names.size() != kitchen::kNumFeatures || values.size() != kitchen::kNumFeatures) {
    throw std::runtime_error("library: reward weights must have " + std::to_string(kitchen::kNumFeatures) + " entries");
  }
  for (std::size_t f = 0; f < names.size(); ++f) {
    if (names[f] != kitchen::kFeatureNames[f]) {
      throw std::runtime_error("library: feature " + std::to_string(f) + " is '" + names[f] + "', expected '" +
                               kitchen::kFeatureNames[f] + "'");
    }
  }
  return to_weights(values);
}

json table_to_json(const std::map<StateKey, ActionDist>& table) {
  json rows = json::array();
  for (const auto& [key, row] : table) rows.push_back({key, row});
  return rows;
}

std::map<StateKey, ActionDist> table_from_json(const json& j) {
  std::map<StateKey, ActionDist> out;
  for (const auto& row : j) out[row.at(0).get<StateKey>()] = row.at(1).get<ActionDist>();
  return out;
}

json bc_to_json(const BCModel& m) { return {{"seat", m.seat()}, {"counts", table_to_json(m.counts())}}; }

BCModel bc_from_json(const json& j) {
  BCModel m(j.at("seat").get<int>());
  m.counts() = table_from_json(j.at("counts"));
  return m;
}

Policy policy_from_json(const json& j) {
  Policy p;
  p.table() = table_from_json(j);
  return p;
}

}  // namespace

void write_library(std::ostream& out, const PolicyLibrary& lib) {
  json strategies = json::array();
  for (const auto& s : lib.strategies) {
    strategies.push_back({{"cluster", s.cluster},
                          {"teams", s.teams},
                          {"theta", weights_to_json(s.theta)},
                          {"irl_gap_trace", s.irl_gap_trace},
                          {"human", bc_to_json(s.human)},
                          {"policy", table_to_json(s.policy.table())},
                          {"reward_trace", s.reward_trace},
                          {"seed", s.seed}});
  }
  const json doc = {{"format", "mesh-policy-library"},
                    {"version", 1},
                    {"layout", lib.layout},
                    {"seed", lib.seed},
                    {"k", lib.k()},
                    {"strategies", strategies},
                    {"baseline",
                     {{"theta", weights_to_json(lib.baseline_theta)},
                      {"human", bc_to_json(lib.aggregate_human)},
                      {"policy", table_to_json(lib.baseline.table())},
                      {"reward_trace", lib.baseline_reward_trace}}}};
  out << doc.dump() << '\n';
}

PolicyLibrary read_library(std::istream& in) {
  const json doc = json::parse(in);
  if (doc.value("format", "") != "mesh-policy-library") throw std::runtime_error("library: not a policy library file");
  if (doc.at("version").get<int>() != 1) throw std::runtime_error("library: unsupported version");
  PolicyLibrary lib;
  lib.layout = doc.at("layout").get<std::string>();
  lib.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& s : doc.at("strategies")) {
    StrategyPolicy sp;
    sp.cluster = s.at("cluster").get<int>();
    sp.teams = s.at("teams").get<std::vector<std::string>>();
    sp.theta = weights_from_json(s.at("theta"));
    sp.irl_gap_trace = s.at("irl_gap_trace").get<std::vector<double>>();
    sp.human = bc_from_json(s.at("human"));
    sp.policy = policy_from_json(s.at("policy"));
    sp.reward_trace = s.at("reward_trace").get<std::vector<double>>();
    sp.seed = s.at("seed").get<std::uint64_t>();
    lib.strategies.push_back(std::move(sp));
  }
  const json& b = doc.at("baseline");
  lib.baseline_theta = weights_from_json(b.at("theta"));
  lib.aggregate_human = bc_from_json(b.at("human"));
  lib.baseline = policy_from_json(b.at("policy"));
  lib.baseline_reward_trace = b.at("reward_trace").get<std::vector<double>>();
  if (doc.at("k").get<int>() != lib.k()) throw std::runtime_error("library: k does not match the strategy count");
  lib.check();
  return lib;
}

}  // namespace mesh::learning
