#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mesh/recognition/clustering.hpp"
#include "mesh/recognition/hmm.hpp"

namespace mesh::recognition {

struct GridCell {
  int n_states = 0;
  int k = 0;
  double silhouette = 0.0;
  double inertia = 0.0;
  double log_likelihood = 0.0;
  std::size_t trim_length = 0;
};

struct GridSearchOptions {
  FitOptions fit;
  int kmeans_restarts = 10;
  /// Fixed trim length; unset means the 25th-percentile decoded length.
  std::optional<std::size_t> trim_length;
  double trim_quantile = 0.25;
  bool parallel = true;
};

struct GridSearchResult {
  HmmModel model;
  StrategyAssignment assignment;
  std::vector<GridCell> table;  // ordered by (N, K)
  std::vector<std::string> dropped;
  std::vector<double> fit_trace;
};

/// Fits one HMM per N over the whole dataset, decodes and trims, clusters
/// for every K, and returns the configuration with the highest silhouette
/// (ties: smaller K, then smaller N). The dataset is processed in team_id
/// order so input order never changes the result.
GridSearchResult grid_search(std::span<const SubtaskTrajectory> dataset, const std::set<int>& n_range,
                             const std::set<int>& k_range, std::uint64_t seed,
                             const GridSearchOptions& options = {});

/// Decodes every non-empty trajectory with the model.
std::vector<HiddenSequence> decode_all(const HmmModel& model, std::span<const SubtaskTrajectory> dataset);

/// Line-delimited dataset file: {"team_id": ..., "symbols": [...]} per line.
/// A leading {"config_hash": ...} line is skipped on reading.
void write_dataset(std::ostream& out, std::span<const SubtaskTrajectory> dataset);
std::vector<SubtaskTrajectory> read_dataset(std::istream& in);

/// Model file: HMM, assignment, seed and full score table as one JSON document.
struct RecognitionModel {
  std::uint64_t seed = 0;
  std::vector<int> n_range;
  std::vector<int> k_range;
  GridSearchResult result;
};
void write_model(std::ostream& out, const RecognitionModel& model);
RecognitionModel read_model(std::istream& in);

}  // namespace mesh::recognition
