#include "mesh/harness/demos.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace mesh::harness {

DeadlockError::DeadlockError(std::string strategy, std::int64_t tick)
    : std::runtime_error("scripted strategy '" + strategy + "' made no progress for " +
                         std::to_string(kDeadlockTicks) + " ticks (stuck at tick " + std::to_string(tick) + ")"),
      strategy_(std::move(strategy)) {}

kitchen::Rollout run_scripted_team(const kitchen::Layout& layout, const ScriptedStrategy& strategy,
                                   std::size_t episode_len, std::uint64_t seed, std::string team_id) {
  strategy.check();
  const ScriptedAgent a0(layout, strategy.seats[0], 0, strategy.noise);
  const ScriptedAgent a1(layout, strategy.seats[1], 1, strategy.noise);
  Rng rng = make_rng(seed);

  kitchen::Rollout r;
  r.team_id = std::move(team_id);
  r.steps.reserve(episode_len);
  WorldState s = kitchen::initial_state(layout);
  std::int64_t last_progress = 0;
  for (std::size_t t = 0; t < episode_len; ++t) {
    const kitchen::JointAction joint{a0.act(s, rng), a1.act(s, rng)};
    kitchen::StepResult res = kitchen::step(layout, s, joint);
    if (!res.events.empty()) last_progress = res.next_state.tick;
    if (res.next_state.tick - last_progress >= kDeadlockTicks) {
      throw DeadlockError(strategy.name, res.next_state.tick);
    }
    r.steps.push_back({std::move(s), joint, std::move(res.events), res.features});
    s = std::move(res.next_state);
  }
  r.final_state = std::move(s);
  return r;
}

DemoSet generate_demos(const kitchen::Layout& layout, const std::vector<ScriptedStrategy>& strategies,
                       std::size_t teams_per_strategy, std::size_t episode_len, std::uint64_t seed) {
  if (strategies.size() < 2) throw std::invalid_argument("generate_demos: need at least two strategies");
  if (episode_len < 100) throw std::invalid_argument("generate_demos: episode_len must be >= 100");

  const std::size_t total = strategies.size() * teams_per_strategy;
  std::vector<std::size_t> ids(total);
  std::iota(ids.begin(), ids.end(), 0);
  Rng shuffle_rng = make_rng(seed, 0xD0);
  for (std::size_t i = total; i > 1; --i) std::swap(ids[i - 1], ids[uniform_index(shuffle_rng, i)]);

  DemoSet out;
  for (const auto& s : strategies) out.strategy_names.push_back(s.name);
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (team number, strategy)
  for (std::size_t si = 0; si < strategies.size(); ++si) {
    for (std::size_t j = 0; j < teams_per_strategy; ++j) order.emplace_back(ids[si * teams_per_strategy + j], si);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [number, si] : order) {
    char name[32];
    std::snprintf(name, sizeof name, "team_%03zu", number);
    out.rollouts.push_back(run_scripted_team(layout, strategies[si], episode_len, mix_seed(seed, number + 1), name));
    out.planted.push_back(static_cast<int>(si));
  }
  return out;
}

std::vector<kitchen::SubtaskTrajectory> annotate_all(const kitchen::Layout& layout, const DemoSet& demos) {
  std::vector<kitchen::SubtaskTrajectory> out;
  out.reserve(demos.rollouts.size());
  for (const auto& r : demos.rollouts) {
    auto pairs = r.as_pairs();
    out.push_back(kitchen::annotate_subtasks(layout, pairs, r.team_id));
  }
  return out;
}

}  // namespace mesh::harness
