#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mesh/learning/tabular.hpp"

namespace mesh::learning {

using RewardWeights = std::array<double, kitchen::kNumFeatures>;

/// Which seat the learner occupies. Alternating episodes teach one table
/// both roles, so the same policy can be read from the human's side.
enum class SeatSchedule { Seat0, Seat1, Alternate };

struct OptimizeOptions {
  std::size_t budget = 2000;  // training episodes
  std::size_t batch = 8;     // episodes per update
  std::size_t episode_len = 400;
  double gamma = 0.99;
  double learning_rate = 0.5;
  double baseline_rate = 0.2;
  double serve_bonus = 0.0;  // extra reward per soup served
  /// States visited fewer times than this during training (and not in the
  /// initial policy) are dropped from the final table and act uniformly.
  std::size_t min_visits = 3;
  SeatSchedule seats = SeatSchedule::Alternate;
  std::uint64_t seed = 0;
};

struct OptimizeResult {
  Policy policy;
  std::vector<double> reward_trace;  // mean undiscounted episode return per batch
};

double shaped_reward(const RewardWeights& theta, const kitchen::FeatureVector& phi, double serve_bonus = 0.0);

/// REINFORCE with a tabular value baseline. The other seat is played by
/// `partner`; the learner starts from `init` when given.
OptimizeResult optimize_policy(const RewardWeights& theta, const BCModel& partner, const kitchen::Layout& layout,
                               const OptimizeOptions& options, const Policy* init = nullptr);

/// Runs one episode with `policy` at `seat` and `partner` at the other.
kitchen::Rollout play_episode(const kitchen::Layout& layout, const Policy& policy, int seat, const BCModel& partner,
                              std::size_t episode_len, Rng& rng, bool greedy = false);

}  // namespace mesh::learning
