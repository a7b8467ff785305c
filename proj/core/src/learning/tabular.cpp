#include "mesh/learning/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mesh::learning {

std::size_t argmax(const ActionDist& dist) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return best;
}

Action sample(const ActionDist& dist, Rng& rng) {
  double u = uniform01(rng);
  for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
    if (u < dist[i]) return kitchen::kAllActions[i];
    u -= dist[i];
  }
  return kitchen::kAllActions.back();
}

std::vector<Sample> seat_samples(const kitchen::Layout& layout, std::span<const kitchen::Rollout> rollouts, int seat) {
  std::vector<Sample> out;
  for (const auto& r : rollouts) {
    for (const auto& step : r.steps) out.push_back({featurize(layout, step.state, seat), step.action.of(seat)});
  }
  return out;
}

ActionDist BCModel::probs(StateKey key) const {
  const auto it = counts_.find(key);
  if (it == counts_.end()) return kUniform;
  double total = 0.0;
  for (double c : it->second) total += c;
  ActionDist out{};
  const double norm = 1.0 + kSmoothing * static_cast<double>(kitchen::kNumActions);
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a] = ((total > 0.0 ? it->second[a] / total : 0.2) + kSmoothing) / norm;
  }
  return out;
}

BCModel behavior_cloning(std::span<const Sample> samples, int seat, const BCModel* init, double init_weight) {
  if (samples.empty()) throw std::invalid_argument("behavior_cloning: no samples");
  if (!(init_weight >= 0.0)) throw std::invalid_argument("behavior_cloning: init_weight must be >= 0");
  BCModel model(seat);
  if (init) {
    for (const auto& [key, c] : init->counts()) {
      auto& row = model.counts()[key];
      for (std::size_t a = 0; a < row.size(); ++a) row[a] = init_weight * c[a];
    }
  }
  for (const Sample& s : samples) model.counts()[s.key][kitchen::index_of(s.action)] += 1.0;
  return model;
}

ActionDist Policy::probs(StateKey key) const {
  const auto it = logits_.find(key);
  if (it == logits_.end()) return kUniform;
  const double top = *std::max_element(it->second.begin(), it->second.end());
  ActionDist out{};
  double z = 0.0;
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a] = std::exp(it->second[a] - top);
    z += out[a];
  }
  for (double& p : out) p /= z;
  return out;
}

Policy Policy::from_bc(const BCModel& bc) {
  Policy p;
  for (const auto& [key, _] : bc.counts()) {
    const ActionDist probs = bc.probs(key);
    auto& row = p.logits(key);
    for (std::size_t a = 0; a < row.size(); ++a) row[a] = std::log(probs[a]);
  }
  return p;
}

}  // namespace mesh::learning
