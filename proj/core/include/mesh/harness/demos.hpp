#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh/harness/scripted.hpp"
#include "mesh/kitchen/rollout.hpp"

namespace mesh::harness {

class DeadlockError : public std::runtime_error {
 public:
  DeadlockError(std::string strategy, std::int64_t tick);
  const std::string& strategy() const { return strategy_; }

 private:
  std::string strategy_;
};

/// Rollouts from scripted dyads plus the ground-truth strategy of each.
/// `planted` is for scoring only; recognition never reads it.
struct DemoSet {
  std::vector<kitchen::Rollout> rollouts;
  std::vector<int> planted;  // index into strategy_names, parallel to rollouts
  std::vector<std::string> strategy_names;
};

inline constexpr int kDeadlockTicks = 100;

/// Plays one scripted team for `episode_len` ticks. Throws DeadlockError
/// if no subtask completes for kDeadlockTicks consecutive ticks.
kitchen::Rollout run_scripted_team(const kitchen::Layout& layout, const ScriptedStrategy& strategy,
                                   std::size_t episode_len, std::uint64_t seed, std::string team_id = {});

/// teams_per_strategy rollouts per strategy. Team ids are assigned through a
/// seeded shuffle so they carry no information about the planted strategy.
DemoSet generate_demos(const kitchen::Layout& layout, const std::vector<ScriptedStrategy>& strategies,
                       std::size_t teams_per_strategy, std::size_t episode_len, std::uint64_t seed);

/// Annotated subtask streams of every rollout.
std::vector<kitchen::SubtaskTrajectory> annotate_all(const kitchen::Layout& layout, const DemoSet& demos);

}  // namespace mesh::harness
