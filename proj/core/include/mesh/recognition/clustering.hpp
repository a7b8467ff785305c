#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mesh::recognition {

/// Decoded hidden-state path of one team.
struct HiddenSequence {
  std::string team_id;
  std::vector<int> states;
};

struct TrimResult {
  std::vector<HiddenSequence> kept;
  std::vector<std::string> dropped;  // teams shorter than the target length
};

/// Truncates paths to their first `target_len` states; shorter paths are
/// dropped and reported. Throws if nothing survives.
TrimResult trim_sequences(std::span<const HiddenSequence> decoded, std::size_t target_len);

/// Nearest-rank percentile of path lengths (q in (0, 1]); the default trim
/// length uses q = 0.25, which keeps at least 75% of the paths.
std::size_t percentile_length(std::span<const HiddenSequence> decoded, double q = 0.25);

using Point = std::vector<double>;

/// Per-position one-hot encoding of equal-length paths into L*N vectors.
std::vector<Point> encode_one_hot(std::span<const HiddenSequence> sequences, int n_states);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<Point> centroids;
  double inertia = 0.0;  // within-cluster sum of squares
};

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs by
/// inertia. Empty clusters are re-seeded from the point farthest from its
/// centroid. Cluster ids are renumbered by first appearance in input order.
KMeansResult kmeans(std::span<const Point> points, int k, std::uint64_t seed, int restarts = 10);

/// Mean silhouette with Euclidean distance; singleton clusters score 0.
double silhouette_score(std::span<const Point> points, std::span<const int> labels);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

struct StrategyAssignment {
  int k = 0;
  std::map<std::string, int> labels;  // team_id -> cluster
  std::vector<Point> centroids;
  double silhouette = 0.0;
  double inertia = 0.0;
  int chosen_n = 0;
  std::size_t trim_length = 0;

  std::vector<std::string> teams_in(int cluster) const;
};

/// One-hot encodes the sequences and clusters them into k strategies.
StrategyAssignment kmeans_cluster(std::span<const HiddenSequence> sequences, int n_states, int k,
                                  std::uint64_t seed, int restarts = 10);

}  // namespace mesh::recognition
