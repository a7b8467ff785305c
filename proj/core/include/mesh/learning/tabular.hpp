#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mesh/kitchen/rollout.hpp"
#include "mesh/learning/featurize.hpp"
#include "mesh/util/random.hpp"

namespace mesh::learning {

using kitchen::Action;
using ActionDist = std::array<double, kitchen::kNumActions>;

inline constexpr ActionDist kUniform = {0.2, 0.2, 0.2, 0.2, 0.2};

/// Index of the largest entry; ties go to the earlier action.
std::size_t argmax(const ActionDist& dist);
Action sample(const ActionDist& dist, Rng& rng);

/// One (state, action) observation for a seat.
struct Sample {
  StateKey key = 0;
  Action action = Action::MoveNorth;
};

/// Every tick of every rollout, seen from `seat`.
std::vector<Sample> seat_samples(const kitchen::Layout& layout, std::span<const kitchen::Rollout> rollouts, int seat);

/// Count-based behavior-cloned model. Probabilities are the empirical action
/// frequencies with 0.01 added to each action before normalising; states
/// never seen give the uniform distribution.
class BCModel {
 public:
  static constexpr double kSmoothing = 0.01;

  BCModel() = default;
  explicit BCModel(int seat) : seat_(seat) {}

  int seat() const { return seat_; }
  ActionDist probs(StateKey key) const;
  ActionDist probs(const kitchen::Layout& layout, const kitchen::WorldState& s, int seat) const {
    return probs(featurize(layout, s, seat));
  }
  bool knows(StateKey key) const { return counts_.contains(key); }

  const std::map<StateKey, ActionDist>& counts() const { return counts_; }
  std::map<StateKey, ActionDist>& counts() { return counts_; }

  friend bool operator==(const BCModel&, const BCModel&) = default;

 private:
  int seat_ = 1;
  std::map<StateKey, ActionDist> counts_;
};

/// Maximum-likelihood fit. With `init`, its counts scaled by `init_weight`
/// seed the table and the new data is added on top (fine-tuning).
BCModel behavior_cloning(std::span<const Sample> samples, int seat, const BCModel* init = nullptr,
                         double init_weight = 0.25);

/// Softmax-tabular policy. Unseen states fall back to uniform.
class Policy {
 public:
  Policy() = default;

  ActionDist probs(StateKey key) const;
  ActionDist probs(const kitchen::Layout& layout, const kitchen::WorldState& s, int seat) const {
    return probs(featurize(layout, s, seat));
  }
  Action greedy(const kitchen::Layout& layout, const kitchen::WorldState& s, int seat) const {
    return kitchen::kAllActions[argmax(probs(layout, s, seat))];
  }

  /// Logits are created on first write, from the uniform distribution.
  ActionDist& logits(StateKey key) { return logits_[key]; }
  const std::map<StateKey, ActionDist>& table() const { return logits_; }
  std::map<StateKey, ActionDist>& table() { return logits_; }

  /// Starts every state the BC model knows at log of its probabilities.
  static Policy from_bc(const BCModel& bc);

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  std::map<StateKey, ActionDist> logits_;
};

}  // namespace mesh::learning
