#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesh/harness/demos.hpp"
#include "mesh/harness/evaluate.hpp"
#include "mesh/learning/library.hpp"
#include "mesh/recognition/grid_search.hpp"

namespace mesh::harness {

struct PipelineConfig {
  std::string layout = "cramped_room";
  std::vector<std::string> strategies = {"role_specialist", "counter_relay", "soup_handoff"};
  std::size_t teams_per_strategy = 15;
  std::size_t demo_len = 150;
  std::uint64_t demo_seed = 1;

  std::vector<int> n_range = {2, 3, 4, 5, 6};
  std::vector<int> k_range = {2, 3, 4, 5};
  std::uint64_t recognition_seed = 1;
  /// Train on the planted labels instead of the recognized clusters.
  bool train_on_planted = false;

  std::size_t budget = 2000;
  int irl_iters = 300;
  std::uint64_t train_seed = 1;

  int games = 25;
  std::size_t eval_len = 400;
  std::uint64_t eval_seed = 1;
  double moe_gamma = 0.9;

  /// Canonical JSON; the hash is taken over its compact dump.
  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  std::string hash() const;
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineSummary {
  std::string config_hash;
  int recognized_k = 0;
  int chosen_n = 0;
  double silhouette = 0.0;
  double ari_vs_planted = 0.0;
  std::vector<std::string> stages_run;  // stages executed this call
  EvaluationReport report;
};

struct PipelineOptions {
  /// Discard any previous run in the directory instead of resuming it.
  bool force = false;
  std::ostream* log = nullptr;
};

inline const std::vector<std::string> kPipelineStages = {"generate", "recognize", "train", "evaluate"};

/// generate -> recognize -> train -> evaluate into `dir`. Every artifact
/// carries the config hash; status.json marks each stage. An existing
/// directory is resumed (completed stages are loaded, not rerun) only if
/// its config hash matches.
PipelineSummary run_pipeline(const PipelineConfig& config, const std::filesystem::path& dir,
                             const PipelineOptions& options = {});

}  // namespace mesh::harness
