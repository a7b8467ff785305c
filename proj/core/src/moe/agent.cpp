#include "mesh/moe/agent.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace mesh::moe {

double step_gap(const ActionDist& probs, Action action) {
  const double gap = *std::max_element(probs.begin(), probs.end()) - probs[kitchen::index_of(action)];
  assert(gap >= 0.0);
  return gap;
}

MoeAgent::MoeAgent(std::shared_ptr<const learning::PolicyLibrary> library, kitchen::Layout layout, MoeConfig config)
    : library_(std::move(library)), layout_(std::move(layout)), config_(config) {
  if (!library_) throw ConfigError("MoeAgent: no policy library");
  if (library_->k() < 2) {
    throw ConfigError("MoeAgent: need at least two strategies, library has " + std::to_string(library_->k()));
  }
  if (!(config_.gamma > 0.0 && config_.gamma <= 1.0)) throw ConfigError("MoeAgent: gamma must be in (0, 1]");
  if (config_.robot_seat != 0 && config_.robot_seat != 1) throw ConfigError("MoeAgent: robot_seat must be 0 or 1");
  if (!library_->layout.empty() && library_->layout != layout_.name()) {
    throw ConfigError("MoeAgent: library was trained on '" + library_->layout + "', not '" + layout_.name() + "'");
  }
  reset();
}

void MoeAgent::reset() {
  weights_.assign(static_cast<std::size_t>(library_->k()), 1.0 / library_->k());
  d_.assign(weights_.size(), 0.0);
  history_.clear();
}

ActionDist MoeAgent::robot_probs(int k, const kitchen::WorldState& s) const {
  return library_->strategies.at(static_cast<std::size_t>(k)).policy.probs(layout_, s, config_.robot_seat);
}

ActionDist MoeAgent::human_probs(int k, const kitchen::WorldState& s) const {
  // featurize(relabel_seats(s), robot) and featurize(s, human) describe the
  // same egocentric view; the seat bit keeps the human's role.
  return library_->strategies.at(static_cast<std::size_t>(k)).policy.probs(layout_, s, human_seat());
}

ActionDist MoeAgent::vote(const kitchen::WorldState& s) const {
  ActionDist total{};
  for (int k = 0; k < this->k(); ++k) {
    const ActionDist p = robot_probs(k, s);
    for (std::size_t a = 0; a < total.size(); ++a) total[a] += weights_[static_cast<std::size_t>(k)] * p[a];
  }
  return total;
}

Action MoeAgent::act(const kitchen::WorldState& s) const { return kitchen::kAllActions[learning::argmax(vote(s))]; }

std::vector<double> MoeAgent::normalized_disagreements() const {
  const double sum = std::accumulate(d_.begin(), d_.end(), 0.0);
  std::vector<double> out(d_.size(), 0.0);
  if (sum > 0.0) {
    for (std::size_t k = 0; k < d_.size(); ++k) out[k] = d_[k] / sum;
  }
  return out;
}

void MoeAgent::observe_human(const kitchen::WorldState& s, Action human_action) {
  Observation obs{{}, human_action};
  for (int k = 0; k < this->k(); ++k) obs.probs.push_back(human_probs(k, s));
  history_.push_back(std::move(obs));
  const std::size_t t = history_.size();
  const double g = config_.gamma;

  if (config_.action == ActionReading::Historical) {
    // Each stored step keeps its own gap, so the sum is maintained incrementally.
    const double w_new = config_.discount == DiscountReading::Recency ? 1.0 : std::pow(g, static_cast<double>(t));
    for (std::size_t k = 0; k < d_.size(); ++k) {
      const double gap = step_gap(history_.back().probs[k], human_action);
      d_[k] = config_.discount == DiscountReading::Recency ? g * d_[k] + gap : d_[k] + w_new * gap;
    }
  } else {
    // Every past state is rescored against the latest action.
    std::fill(d_.begin(), d_.end(), 0.0);
    for (std::size_t j = 1; j <= t; ++j) {
      const double w = config_.discount == DiscountReading::Recency ? std::pow(g, static_cast<double>(t - j))
                                                                    : std::pow(g, static_cast<double>(j));
      for (std::size_t k = 0; k < d_.size(); ++k) d_[k] += w * step_gap(history_[j - 1].probs[k], human_action);
    }
  }

  const double sum = std::accumulate(d_.begin(), d_.end(), 0.0);
  if (sum <= 0.0) return;  // no expert is distinguishable yet
  double z = 0.0;
  for (std::size_t k = 0; k < d_.size(); ++k) z += 1.0 - d_[k] / sum;
  for (std::size_t k = 0; k < d_.size(); ++k) weights_[k] = (1.0 - d_[k] / sum) / z;
}

void write_belief_record(std::ostream& out, const BeliefRecord& r) {
  const nlohmann::json j = {
      {"t", r.tick}, {"w", r.weights}, {"d", r.disagreements}, {"action", kitchen::to_string(r.action)}};
  out << j.dump() << '\n';
}

}  // namespace mesh::moe
