#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mesh/harness/fluency.hpp"
#include "mesh/harness/scripted.hpp"
#include "mesh/learning/library.hpp"
#include "mesh/moe/agent.hpp"

namespace mesh::harness {

struct AgentSpec {
  enum class Kind { Mesh, Baseline, Fixed };
  Kind kind = Kind::Mesh;
  int k = -1;  // Fixed only

  std::string name() const;
  static AgentSpec mesh() { return {Kind::Mesh, -1}; }
  static AgentSpec baseline() { return {Kind::Baseline, -1}; }
  static AgentSpec fixed(int k) { return {Kind::Fixed, k}; }
};

struct PartnerSpec {
  enum class Kind { AggregateBC, StrategyBC, Scripted, FixedPolicy };
  Kind kind = Kind::AggregateBC;
  int k = -1;                 // StrategyBC and FixedPolicy
  ScriptedStrategy scripted;  // Scripted

  std::string name() const;
  static PartnerSpec aggregate_bc() { return {Kind::AggregateBC, -1, {}}; }
  static PartnerSpec strategy_bc(int k) { return {Kind::StrategyBC, k, {}}; }
  static PartnerSpec scripted_strategy(ScriptedStrategy s) { return {Kind::Scripted, -1, std::move(s)}; }
  /// Greedy pi_k played from the human's seat.
  static PartnerSpec fixed_policy(int k) { return {Kind::FixedPolicy, k, {}}; }
};

struct EvaluationRequest {
  std::vector<AgentSpec> agents;
  std::vector<PartnerSpec> partners;
  std::vector<bool> swapped = {false, true};  // seatings to run
  int games = 25;
  std::size_t episode_len = 400;
  std::uint64_t seed = 0;
  bool keep_rollouts = false;
  bool keep_beliefs = false;
};

struct EvalCell {
  std::string layout;
  std::string agent;
  std::string partner;
  bool swapped = false;  // robot at seat 1
  std::vector<double> orders;
  double mean_orders = 0.0;
  double sd_orders = 0.0;  // sample standard deviation
  std::vector<Fluency> fluency;
  std::vector<kitchen::Rollout> rollouts;
  std::vector<std::vector<moe::BeliefRecord>> beliefs;
};

struct EvaluationReport {
  std::string layout;
  int games = 0;
  std::size_t episode_len = 0;
  std::uint64_t seed = 0;
  std::vector<EvalCell> cells;

  const EvalCell* find(const std::string& agent, const std::string& partner, bool swapped) const;
};

class EvaluationConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One cell per (agent, partner, seating), G episodes each. Episode seeds
/// derive from the cell's names, so cells do not depend on each other.
EvaluationReport evaluate(std::shared_ptr<const learning::PolicyLibrary> library, const kitchen::Layout& layout,
                          const EvaluationRequest& request, const moe::MoeConfig& moe_config = {});

/// Plays one episode; fills `beliefs` for the mesh agent when given.
kitchen::Rollout play_evaluation_episode(const std::shared_ptr<const learning::PolicyLibrary>& library,
                                         const kitchen::Layout& layout, const AgentSpec& agent,
                                         const PartnerSpec& partner, bool swapped, std::size_t episode_len,
                                         std::uint64_t seed, const moe::MoeConfig& moe_config,
                                         std::vector<moe::BeliefRecord>* beliefs = nullptr);

void write_report_csv(std::ostream& out, const EvaluationReport& report, const std::string& config_hash = {});
void write_report_json(std::ostream& out, const EvaluationReport& report, const std::string& config_hash = {});
/// Orders served, mean +/- sd, one block per partner with Standard and
/// SwitchInd columns.
void write_report_table(std::ostream& out, const EvaluationReport& report);

}  // namespace mesh::harness
