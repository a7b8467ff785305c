#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh/learning/irl.hpp"
#include "mesh/learning/optimize.hpp"
#include "mesh/recognition/clustering.hpp"

namespace mesh::learning {

/// Everything trained for one strategy cluster.
struct StrategyPolicy {
  int cluster = 0;
  std::vector<std::string> teams;
  RewardWeights theta{};
  std::vector<double> irl_gap_trace;
  BCModel human;  // cluster human proxy, fine-tuned from the aggregate
  Policy policy;
  std::vector<double> reward_trace;
  std::uint64_t seed = 0;

  friend bool operator==(const StrategyPolicy&, const StrategyPolicy&) = default;
};

struct PolicyLibrary {
  std::string layout;
  std::uint64_t seed = 0;
  std::vector<StrategyPolicy> strategies;
  RewardWeights baseline_theta{};
  BCModel aggregate_human;
  Policy baseline;
  std::vector<double> baseline_reward_trace;

  int k() const { return static_cast<int>(strategies.size()); }
  /// K >= 2 and clusters numbered 0..K-1 in order.
  void check() const;

  friend bool operator==(const PolicyLibrary&, const PolicyLibrary&) = default;
};

struct TrainOptions {
  IrlOptions irl;
  OptimizeOptions optimize;
  double finetune_weight = 0.25;  // weight of aggregate counts when fine-tuning BC
  bool warm_start = true;         // start each policy from its cluster's BC model
  double baseline_serve_bonus = kitchen::kServeReward;
};

class TrainError : public std::runtime_error {
 public:
  TrainError(std::string stage, int cluster, const std::string& what);
  const std::string& stage() const { return stage_; }
  int cluster() const { return cluster_; }  // -1 for the baseline or partitioning

 private:
  std::string stage_;
  int cluster_;
};

/// Both seats' (state, action) pairs; the seat bit keeps them apart.
std::vector<Sample> team_samples(const kitchen::Layout& layout, std::span<const kitchen::Rollout> rollouts);

/// Per cluster: MaxEnt IRL, BC fine-tuning and policy optimization against
/// the cluster proxy. Also trains the baseline on the aggregate data with
/// the serve reward added.
PolicyLibrary train_library(std::span<const kitchen::Rollout> rollouts,
                            const recognition::StrategyAssignment& assignment, const kitchen::Layout& layout,
                            std::uint64_t seed, const TrainOptions& options = {});

void write_library(std::ostream& out, const PolicyLibrary& library);
PolicyLibrary read_library(std::istream& in);

}  // namespace mesh::learning
