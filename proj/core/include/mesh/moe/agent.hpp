#pragma once

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mesh/learning/library.hpp"

namespace mesh::moe {

using kitchen::Action;
using learning::ActionDist;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// How the disagreement sum weights a step j of t observed steps.
enum class DiscountReading {
  Recency,  // gamma^(t - j): older steps count less; d = gamma d + gap
  Prose,    // gamma^j: older steps count more
};

/// Which human action a historical state is scored against.
enum class ActionReading {
  Historical,  // each state against the action taken in it
  Literal,     // every past state against the latest action
};

struct MoeConfig {
  double gamma = 0.9;
  int robot_seat = 0;
  DiscountReading discount = DiscountReading::Recency;
  ActionReading action = ActionReading::Historical;
};

struct BeliefRecord {
  std::int64_t tick = 0;
  std::vector<double> weights;
  std::vector<double> disagreements;
  Action action = Action::MoveNorth;
};

/// Mixture of the library's strategy policies. The robot acts by a
/// belief-weighted vote; beliefs move away from experts whose human-seat
/// predictions disagree with what the human actually does.
class MoeAgent {
 public:
  MoeAgent(std::shared_ptr<const learning::PolicyLibrary> library, kitchen::Layout layout, MoeConfig config = {});

  int k() const { return static_cast<int>(weights_.size()); }
  const MoeConfig& config() const { return config_; }
  int human_seat() const { return 1 - config_.robot_seat; }

  /// Sum over experts of w^k pi_k^R(.|s).
  ActionDist vote(const kitchen::WorldState& s) const;
  /// argmax of the vote; ties go to the earlier action.
  Action act(const kitchen::WorldState& s) const;

  /// pi_k read from the human's seat. featurize(s, human seat) is the view
  /// featurize(relabel_seats(s), robot seat) gives, with the seat bit kept.
  ActionDist human_probs(int k, const kitchen::WorldState& s) const;
  ActionDist robot_probs(int k, const kitchen::WorldState& s) const;

  void observe_human(const kitchen::WorldState& s, Action human_action);
  void reset();

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& disagreements() const { return d_; }
  /// d / sum(d), or all zeros while sum(d) = 0.
  std::vector<double> normalized_disagreements() const;
  std::size_t history_size() const { return history_.size(); }

  BeliefRecord record(std::int64_t tick, Action action) const { return {tick, weights_, d_, action}; }

 private:
  struct Observation {
    std::vector<ActionDist> probs;  // pi_k^H(.|s) per expert
    Action action;
  };

  std::shared_ptr<const learning::PolicyLibrary> library_;
  kitchen::Layout layout_;
  MoeConfig config_;
  std::vector<double> weights_;
  std::vector<double> d_;
  std::vector<Observation> history_;
};

/// Per-step disagreement of one expert: max_a p(a) - p(action).
double step_gap(const ActionDist& probs, Action action);

/// One JSON object per line: {"t":..,"w":[..],"d":[..],"action":".."}.
void write_belief_record(std::ostream& out, const BeliefRecord& record);

}  // namespace mesh::moe
