#include "mesh/learning/optimize.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace mesh::learning {

double shaped_reward(const RewardWeights& theta, const kitchen::FeatureVector& phi, double serve_bonus) {
  double r = serve_bonus * phi[kitchen::Feature::SoupServed];
  for (std::size_t f = 0; f < theta.size(); ++f) r += theta[f] * phi.counts[f];
  return r;
}

kitchen::Rollout play_episode(const kitchen::Layout& layout, const Policy& policy, int seat, const BCModel& partner,
                              std::size_t episode_len, Rng& rng, bool greedy) {
  kitchen::Rollout r;
  r.steps.reserve(episode_len);
  kitchen::WorldState s = kitchen::initial_state(layout);
  for (std::size_t t = 0; t < episode_len; ++t) {
    const ActionDist mine = policy.probs(layout, s, seat);
    const Action own = greedy ? kitchen::kAllActions[argmax(mine)] : sample(mine, rng);
    const Action other = sample(partner.probs(layout, s, 1 - seat), rng);
    const kitchen::JointAction joint = kitchen::make_joint(seat, own, other);
    kitchen::StepResult res = kitchen::step(layout, s, joint);
    r.steps.push_back({std::move(s), joint, std::move(res.events), res.features});
    s = std::move(res.next_state);
  }
  r.final_state = std::move(s);
  return r;
}

OptimizeResult optimize_policy(const RewardWeights& theta, const BCModel& partner, const kitchen::Layout& layout,
                               const OptimizeOptions& options, const Policy* init) {
  if (options.budget == 0) throw std::invalid_argument("optimize_policy: budget must be > 0");
  if (options.batch == 0) throw std::invalid_argument("optimize_policy: batch must be > 0");
  if (options.episode_len == 0) throw std::invalid_argument("optimize_policy: episode_len must be > 0");
  for (double v : theta) {
    if (!std::isfinite(v)) throw std::invalid_argument("optimize_policy: theta is not finite");
  }

  OptimizeResult out;
  out.policy = init ? *init : Policy{};
  std::unordered_map<StateKey, double> value;
  std::unordered_map<StateKey, std::size_t> visits_of;
  Rng rng = make_rng(options.seed, 0x0B);

  struct Visit {
    StateKey key;
    std::size_t action;
    double ret;
  };
  std::vector<Visit> visits;
  std::size_t episode = 0;
  while (episode < options.budget) {
    const std::size_t n = std::min(options.batch, options.budget - episode);
    visits.clear();
    double batch_return = 0.0;
    for (std::size_t e = 0; e < n; ++e, ++episode) {
      const int seat = options.seats == SeatSchedule::Seat0   ? 0
                       : options.seats == SeatSchedule::Seat1 ? 1
                                                              : static_cast<int>(episode % 2);
      const kitchen::Rollout r = play_episode(layout, out.policy, seat, partner, options.episode_len, rng);
      std::vector<double> rewards(r.steps.size());
      for (std::size_t t = 0; t < r.steps.size(); ++t) {
        rewards[t] = shaped_reward(theta, r.steps[t].features, options.serve_bonus);
        batch_return += rewards[t];
      }
      double g = 0.0;
      const std::size_t first = visits.size();
      visits.resize(first + r.steps.size());
      for (std::size_t t = r.steps.size(); t-- > 0;) {
        g = rewards[t] + options.gamma * g;
        visits[first + t] = {featurize(layout, r.steps[t].state, seat), kitchen::index_of(r.steps[t].action.of(seat)),
                             g};
      }
    }
    out.reward_trace.push_back(batch_return / static_cast<double>(n));

    // Advantages are scaled by their batch spread so the step size does not
    // depend on the magnitude of theta.
    double sq = 0.0;
    for (const Visit& v : visits) {
      const auto it = value.find(v.key);
      const double adv = v.ret - (it == value.end() ? 0.0 : it->second);
      sq += adv * adv;
    }
    const double scale = sq > 0.0 ? 1.0 / std::sqrt(sq / static_cast<double>(visits.size())) : 0.0;
    const double step = options.learning_rate / static_cast<double>(n);
    for (const Visit& v : visits) {
      ++visits_of[v.key];
      double& baseline = value[v.key];
      const double adv = (v.ret - baseline) * scale;
      baseline += options.baseline_rate * (v.ret - baseline);
      if (adv == 0.0) continue;
      const ActionDist p = out.policy.probs(v.key);
      ActionDist& logit = out.policy.logits(v.key);
      for (std::size_t a = 0; a < logit.size(); ++a) logit[a] += step * adv * ((a == v.action ? 1.0 : 0.0) - p[a]);
    }
  }
  // Rarely visited states carry little more than noise and dominate the table size.
  for (auto it = out.policy.table().begin(); it != out.policy.table().end();) {
    const bool seeded = init && init->table().contains(it->first);
    const auto v = visits_of.find(it->first);
    if (!seeded && (v == visits_of.end() || v->second < options.min_visits)) {
      it = out.policy.table().erase(it);
    } else {
      // Six decimals keep the saved library compact; the change is far below sampling noise.
      for (double& x : it->second) x = std::round(x * 1e6) / 1e6;
      ++it;
    }
  }
  return out;
}

}  // namespace mesh::learning
