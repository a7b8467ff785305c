#include "mesh/recognition/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "mesh/util/random.hpp"

namespace mesh::recognition {

namespace {

double squared_distance(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

int nearest(const Point& p, const std::vector<Point>& centroids, double* dist = nullptr) {
  int best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

std::vector<Point> plus_plus_seeds(std::span<const Point> points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Point> centroids;
  std::vector<bool> taken(n, false);
  std::size_t first = uniform_index(rng, n);
  centroids.push_back(points[first]);
  taken[first] = true;
  std::vector<double> d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest(points[i], centroids, &d2[i]);
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        u -= d2[i];
        if (u < 0.0) break;
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i]) {
          pick = i;
          break;
        }
      }
    }
    taken[pick] = true;
    centroids.push_back(points[pick]);
  }
  return centroids;
}

KMeansResult lloyd(std::span<const Point> points, std::vector<Point> centroids) {
  const std::size_t n = points.size();
  const std::size_t k = centroids.size();
  const std::size_t dim = points.front().size();
  std::vector<int> labels(n, -1);
  std::vector<double> dist(n);

  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest(points[i], centroids, &dist[i]);
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
    }

    std::vector<int> sizes(k, 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(labels[i])] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      --sizes[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      sizes[c] = 1;
      dist[far] = 0.0;
      changed = true;
    }

    for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = centroids[static_cast<std::size_t>(labels[i])];
      for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : centroids[c]) v /= sizes[c];
    }
    if (!changed) break;
  }

  KMeansResult r;
  r.labels = std::move(labels);
  r.centroids = std::move(centroids);
  for (std::size_t i = 0; i < n; ++i) {
    r.inertia += squared_distance(points[i], r.centroids[static_cast<std::size_t>(r.labels[i])]);
  }
  return r;
}

void renumber_by_appearance(KMeansResult& r) {
  std::vector<int> map(r.centroids.size(), -1);
  int next = 0;
  for (int l : r.labels) {
    if (map[static_cast<std::size_t>(l)] < 0) map[static_cast<std::size_t>(l)] = next++;
  }
  std::vector<Point> centroids(r.centroids.size());
  for (std::size_t c = 0; c < map.size(); ++c) centroids[static_cast<std::size_t>(map[c])] = std::move(r.centroids[c]);
  for (int& l : r.labels) l = map[static_cast<std::size_t>(l)];
  r.centroids = std::move(centroids);
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

TrimResult trim_sequences(std::span<const HiddenSequence> decoded, std::size_t target_len) {
  if (target_len < 1) throw std::invalid_argument("trim_sequences: target length must be >= 1");
  TrimResult out;
  for (const auto& seq : decoded) {
    if (seq.states.size() >= target_len) {
      out.kept.push_back({seq.team_id, {seq.states.begin(), seq.states.begin() + static_cast<std::ptrdiff_t>(target_len)}});
    } else {
      out.dropped.push_back(seq.team_id);
    }
  }
  if (out.kept.empty()) {
    throw std::runtime_error("trim_sequences: every path is shorter than " + std::to_string(target_len));
  }
  return out;
}

std::size_t percentile_length(std::span<const HiddenSequence> decoded, double q) {
  if (decoded.empty()) throw std::invalid_argument("percentile_length: no paths");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("percentile_length: q must be in (0, 1]");
  std::vector<std::size_t> lengths;
  for (const auto& s : decoded) lengths.push_back(s.states.size());
  std::sort(lengths.begin(), lengths.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(lengths.size())));
  return lengths[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<Point> encode_one_hot(std::span<const HiddenSequence> sequences, int n_states) {
  std::vector<Point> out;
  if (sequences.empty()) return out;
  const std::size_t len = sequences.front().states.size();
  for (const auto& seq : sequences) {
    if (seq.states.size() != len) throw std::invalid_argument("encode_one_hot: paths differ in length");
    Point p(len * static_cast<std::size_t>(n_states), 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      const int s = seq.states[t];
      if (s < 0 || s >= n_states) throw std::invalid_argument("encode_one_hot: state index out of range");
      p[t * static_cast<std::size_t>(n_states) + static_cast<std::size_t>(s)] = 1.0;
    }
    out.push_back(std::move(p));
  }
  return out;
}

KMeansResult kmeans(std::span<const Point> points, int k, std::uint64_t seed, int restarts) {
  if (k < 2) throw std::invalid_argument("kmeans: K must be >= 2");
  if (points.size() <= static_cast<std::size_t>(k)) {
    throw std::invalid_argument("kmeans: need more than K=" + std::to_string(k) + " sequences, got " +
                                std::to_string(points.size()));
  }
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    KMeansResult run = lloyd(points, plus_plus_seeds(points, k, rng));
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  renumber_by_appearance(best);
  return best;
}

double silhouette_score(std::span<const Point> points, std::span<const int> labels) {
  if (points.size() != labels.size()) throw std::invalid_argument("silhouette: size mismatch");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw std::invalid_argument("silhouette: need at least two clusters");

  const std::size_t n = points.size();
  double total = 0.0;
  std::map<int, double> sum_to;
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[labels[i]] == 1) continue;
    sum_to.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_to[labels[j]] += std::sqrt(squared_distance(points[i], points[j]));
    }
    const double a = sum_to[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [cluster, size] : sizes) {
      if (cluster == labels[i]) continue;
      b = std::min(b, sum_to[cluster] / static_cast<double>(size));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: size mismatch");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, v] : table) index += choose2(v);
  for (const auto& [_, v] : rows) sum_rows += choose2(v);
  for (const auto& [_, v] : cols) sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

std::vector<std::string> StrategyAssignment::teams_in(int cluster) const {
  std::vector<std::string> out;
  for (const auto& [team, label] : labels) {
    if (label == cluster) out.push_back(team);
  }
  return out;
}

StrategyAssignment kmeans_cluster(std::span<const HiddenSequence> sequences, int n_states, int k,
                                  std::uint64_t seed, int restarts) {
  const auto points = encode_one_hot(sequences, n_states);
  KMeansResult km = kmeans(points, k, seed, restarts);
  StrategyAssignment out;
  out.k = k;
  out.chosen_n = n_states;
  out.trim_length = sequences.empty() ? 0 : sequences.front().states.size();
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    out.labels[sequences[i].team_id] = km.labels[i];
  }
  out.centroids = km.centroids;
  out.inertia = km.inertia;
  out.silhouette = silhouette_score(points, km.labels);
  return out;
}

}  // namespace mesh::recognition
