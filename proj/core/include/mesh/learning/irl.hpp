#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mesh/kitchen/rollout.hpp"

namespace mesh::learning {

/// Finite MDP whose transitions carry feature vectors.
struct FeatureMdp {
  struct Outcome {
    int next = 0;
    double prob = 0.0;
    std::vector<double> features;  // n_features entries
  };
  int n_states = 0;
  int n_actions = 0;
  int n_features = 0;
  int start = 0;
  /// outcomes[s * n_actions + a]; an empty list marks the action unavailable.
  std::vector<std::vector<Outcome>> outcomes;

  const std::vector<Outcome>& at(int s, int a) const {
    return outcomes[static_cast<std::size_t>(s * n_actions + a)];
  }
  void check() const;
};

/// pi[t][s * n_actions + a] for t < horizon.
using TimePolicy = std::vector<std::vector<double>>;

/// Finite-horizon discounted soft value iteration for reward theta . phi.
/// `log_partition`, if given, receives the soft value of the start state.
TimePolicy soft_value_iteration(const FeatureMdp& mdp, std::span<const double> theta, int horizon, double gamma,
                                double* log_partition = nullptr);

/// Sum over t < horizon of gamma^t E[phi_t] from the start state.
std::vector<double> expected_feature_counts(const FeatureMdp& mdp, const TimePolicy& policy, double gamma);

class IrlError : public std::runtime_error {
 public:
  IrlError(int iteration, const std::string& what);
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct IrlOptions {
  int horizon = 400;
  int iters = 300;
  double learning_rate = 0.05;
  double gamma = 0.99;
  double l2 = 0.0;          // Gaussian prior on theta
  double tolerance = 1e-6;  // stop once the gradient is this small
};

struct IrlResult {
  std::vector<double> theta;
  std::vector<double> gap_trace;  // infinity-norm gap before each update, then after the last
  std::vector<double> empirical;
  std::vector<double> expected;
};

/// Ascent on the MaxEnt likelihood theta . empirical - log Z(theta), whose
/// gradient is empirical - expected. Steps solve (H + mu I) d = gradient
/// with H the finite-difference Jacobian of the expected counts; mu starts
/// at 1 / learning_rate (a plain gradient step) and shrinks after each step
/// that raises the likelihood, growing again when one does not.
IrlResult maxent_irl_mdp(const FeatureMdp& mdp, std::span<const double> empirical, const IrlOptions& options,
                         std::vector<double> theta0 = {});

/// Team-level object-flow abstraction of a kitchen. A state is the
/// multiset of items the two players hold plus every pot's status
/// (0-2 onions, cooking, ready); an action is one subtask by either
/// player, dropping a held item, or waiting. Travel is folded into a
/// per-tick success probability from layout distances, and a cooking pot
/// finishes with probability 1/20 per tick.
FeatureMdp kitchen_abstraction(const kitchen::Layout& layout);

/// Mean over rollouts of sum_{t < horizon} gamma^t phi_t.
std::vector<double> empirical_feature_counts(std::span<const kitchen::Rollout> rollouts, int horizon, double gamma);

/// MaxEnt IRL on kitchen rollouts. The horizon is capped by the shortest rollout.
IrlResult maxent_irl(std::span<const kitchen::Rollout> rollouts, const kitchen::Layout& layout,
                     const IrlOptions& options = {});

}  // namespace mesh::learning
