#include "mesh/recognition/grid_search.hpp"

#include <algorithm>
#include <future>
#include <stdexcept>

#include "mesh/util/random.hpp"

namespace mesh::recognition {

namespace {

struct PerN {
  HmmFit fit;
  std::vector<HiddenSequence> kept;
  std::vector<std::string> dropped;
  std::size_t trim_length = 0;
  std::vector<std::pair<GridCell, StrategyAssignment>> cells;
};

PerN run_for_n(std::span<const SubtaskTrajectory> data, int n, const std::set<int>& k_range,
               std::uint64_t seed, const GridSearchOptions& options) {
  PerN out;
  out.fit = fit_hmm(data, n, mix_seed(seed, static_cast<std::uint64_t>(n)), options.fit);
  const auto decoded = decode_all(out.fit.model, data);
  out.trim_length = options.trim_length.value_or(percentile_length(decoded, options.trim_quantile));
  TrimResult trimmed = trim_sequences(decoded, out.trim_length);
  out.kept = std::move(trimmed.kept);
  out.dropped = std::move(trimmed.dropped);
  for (int k : k_range) {
    if (out.kept.size() <= static_cast<std::size_t>(k)) continue;
    StrategyAssignment a = kmeans_cluster(out.kept, n, k, mix_seed(seed, 1000u + static_cast<std::uint64_t>(k)),
                                          options.kmeans_restarts);
    GridCell cell{n, k, a.silhouette, a.inertia, out.fit.log_likelihood_trace.back(), out.trim_length};
    out.cells.emplace_back(cell, std::move(a));
  }
  return out;
}

}  // namespace

std::vector<HiddenSequence> decode_all(const HmmModel& model, std::span<const SubtaskTrajectory> dataset) {
  std::vector<HiddenSequence> out;
  for (const auto& traj : dataset) {
    if (traj.symbols.empty()) continue;
    out.push_back({traj.team_id, viterbi_decode(model, traj)});
  }
  return out;
}

GridSearchResult grid_search(std::span<const SubtaskTrajectory> dataset, const std::set<int>& n_range,
                             const std::set<int>& k_range, std::uint64_t seed,
                             const GridSearchOptions& options) {
  if (n_range.empty() || k_range.empty()) throw std::invalid_argument("grid_search: empty N or K range");
  if (*n_range.begin() < 1 || *n_range.rbegin() >= kNumSymbols) {
    throw std::invalid_argument("grid_search: N must lie in [1, 7)");
  }
  if (*k_range.begin() < 2) throw std::invalid_argument("grid_search: K must be >= 2");

  std::vector<SubtaskTrajectory> data;
  for (const auto& t : dataset) {
    if (!t.symbols.empty()) data.push_back(t);
  }
  if (data.empty()) throw std::invalid_argument("grid_search: no non-empty trajectories");
  std::sort(data.begin(), data.end(),
            [](const auto& a, const auto& b) { return a.team_id < b.team_id; });
  for (std::size_t i = 1; i < data.size(); ++i) {
    if (data[i].team_id == data[i - 1].team_id) {
      throw std::invalid_argument("grid_search: duplicate team id '" + data[i].team_id + "'");
    }
  }

  std::vector<PerN> per_n;
  if (options.parallel) {
    std::vector<std::future<PerN>> jobs;
    for (int n : n_range) {
      jobs.push_back(std::async(std::launch::async, run_for_n, std::span<const SubtaskTrajectory>(data), n,
                                std::cref(k_range), seed, std::cref(options)));
    }
    for (auto& j : jobs) per_n.push_back(j.get());
  } else {
    for (int n : n_range) per_n.push_back(run_for_n(data, n, k_range, seed, options));
  }

  GridSearchResult result;
  const PerN* best_n = nullptr;
  const std::pair<GridCell, StrategyAssignment>* best = nullptr;
  for (const PerN& p : per_n) {
    for (const auto& entry : p.cells) {
      result.table.push_back(entry.first);
      const GridCell& c = entry.first;
      if (!best) {
        best = &entry;
        best_n = &p;
        continue;
      }
      const GridCell& b = best->first;
      const bool better = c.silhouette > b.silhouette ||
                          (c.silhouette == b.silhouette && (c.k < b.k || (c.k == b.k && c.n_states < b.n_states)));
      if (better) {
        best = &entry;
        best_n = &p;
      }
    }
  }
  if (!best) throw std::runtime_error("grid_search: no (N, K) cell had more sequences than K");

  result.model = best_n->fit.model;
  result.assignment = best->second;
  result.dropped = best_n->dropped;
  result.fit_trace = best_n->fit.log_likelihood_trace;
  return result;
}

}  // namespace mesh::recognition
