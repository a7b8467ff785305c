#include "mesh/learning/irl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace mesh::learning {

using kitchen::CellKind;
using kitchen::Coord;
using kitchen::Feature;
using kitchen::Item;

void FeatureMdp::check() const {
  if (n_states < 1 || n_actions < 1 || n_features < 1) throw std::invalid_argument("FeatureMdp: empty dimensions");
  if (start < 0 || start >= n_states) throw std::invalid_argument("FeatureMdp: start out of range");
  if (outcomes.size() != static_cast<std::size_t>(n_states * n_actions)) {
    throw std::invalid_argument("FeatureMdp: outcome table has the wrong size");
  }
  for (int s = 0; s < n_states; ++s) {
    bool any = false;
    for (int a = 0; a < n_actions; ++a) {
      const auto& outs = at(s, a);
      if (outs.empty()) continue;
      any = true;
      double total = 0.0;
      for (const auto& o : outs) {
        if (o.next < 0 || o.next >= n_states) throw std::invalid_argument("FeatureMdp: successor out of range");
        if (o.features.size() != static_cast<std::size_t>(n_features)) {
          throw std::invalid_argument("FeatureMdp: feature vector has the wrong length");
        }
        total += o.prob;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("FeatureMdp: outcome probabilities of state " + std::to_string(s) + " action " +
                                    std::to_string(a) + " sum to " + std::to_string(total));
      }
    }
    if (!any) throw std::invalid_argument("FeatureMdp: state " + std::to_string(s) + " has no action");
  }
}

TimePolicy soft_value_iteration(const FeatureMdp& mdp, std::span<const double> theta, int horizon, double gamma,
                                double* log_partition) {
  if (theta.size() != static_cast<std::size_t>(mdp.n_features)) {
    throw std::invalid_argument("soft_value_iteration: theta has the wrong length");
  }
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);

  // Immediate expected reward does not depend on t.
  std::vector<double> reward(S * A, 0.0);
  for (std::size_t i = 0; i < S * A; ++i) {
    for (const auto& o : mdp.outcomes[i]) {
      double r = 0.0;
      for (std::size_t f = 0; f < theta.size(); ++f) r += theta[f] * o.features[f];
      reward[i] += o.prob * r;
    }
  }

  TimePolicy pi(static_cast<std::size_t>(std::max(horizon, 0)), std::vector<double>(S * A, 0.0));
  std::vector<double> v_next(S, 0.0), v(S), q(A);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  for (int t = horizon - 1; t >= 0; --t) {
    auto& row = pi[static_cast<std::size_t>(t)];
    for (std::size_t s = 0; s < S; ++s) {
      double top = kNegInf;
      for (std::size_t a = 0; a < A; ++a) {
        const auto& outs = mdp.outcomes[s * A + a];
        if (outs.empty()) {
          q[a] = kNegInf;
          continue;
        }
        double future = 0.0;
        for (const auto& o : outs) future += o.prob * v_next[static_cast<std::size_t>(o.next)];
        q[a] = reward[s * A + a] + gamma * future;
        top = std::max(top, q[a]);
      }
      double z = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        if (q[a] != kNegInf) z += std::exp(q[a] - top);
      }
      v[s] = top + std::log(z);
      for (std::size_t a = 0; a < A; ++a) row[s * A + a] = q[a] == kNegInf ? 0.0 : std::exp(q[a] - v[s]);
    }
    std::swap(v, v_next);
  }
  if (log_partition) *log_partition = v_next[static_cast<std::size_t>(mdp.start)];
  return pi;
}

std::vector<double> expected_feature_counts(const FeatureMdp& mdp, const TimePolicy& policy, double gamma) {
  const auto S = static_cast<std::size_t>(mdp.n_states);
  const auto A = static_cast<std::size_t>(mdp.n_actions);
  std::vector<double> counts(static_cast<std::size_t>(mdp.n_features), 0.0);
  std::vector<double> d(S, 0.0), d_next(S);
  d[static_cast<std::size_t>(mdp.start)] = 1.0;
  double discount = 1.0;
  for (const auto& row : policy) {
    std::fill(d_next.begin(), d_next.end(), 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (d[s] == 0.0) continue;
      for (std::size_t a = 0; a < A; ++a) {
        const double mass = d[s] * row[s * A + a];
        if (mass == 0.0) continue;
        for (const auto& o : mdp.outcomes[s * A + a]) {
          const double m = mass * o.prob;
          d_next[static_cast<std::size_t>(o.next)] += m;
          for (std::size_t f = 0; f < counts.size(); ++f) counts[f] += discount * m * o.features[f];
        }
      }
    }
    std::swap(d, d_next);
    discount *= gamma;
  }
  return counts;
}

IrlError::IrlError(int iteration, const std::string& what)
    : std::runtime_error("maxent_irl: " + what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}

namespace {

// Solves (H + damping I) x = b by Cholesky; false if not positive definite.
bool solve_damped(const std::vector<double>& hess, double damping, const std::vector<double>& b,
                  std::vector<double>& x) {
  const std::size_t n = b.size();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = hess[i * n + j] + (i == j ? damping : 0.0);
      for (std::size_t k = 0; k < j; ++k) sum -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(sum > 0.0)) return false;
        l[i * n + i] = std::sqrt(sum);
      } else {
        l[i * n + j] = sum / l[j * n + j];
      }
    }
  }
  x = b;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l[i * n + k] * x[k];
    x[i] /= l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) x[i] -= l[k * n + i] * x[k];
    x[i] /= l[i * n + i];
  }
  return true;
}

double gap_norm(std::span<const double> a, std::span<const double> b) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] - b[i]));
  return g;
}

}  // namespace

IrlResult maxent_irl_mdp(const FeatureMdp& mdp, std::span<const double> empirical, const IrlOptions& options,
                         std::vector<double> theta0) {
  if (options.iters < 1) throw std::invalid_argument("maxent_irl: iters must be >= 1");
  if (options.horizon < 0) throw std::invalid_argument("maxent_irl: horizon must be >= 0");
  if (!(options.learning_rate > 0.0)) throw std::invalid_argument("maxent_irl: learning_rate must be > 0");
  if (empirical.size() != static_cast<std::size_t>(mdp.n_features)) {
    throw std::invalid_argument("maxent_irl: empirical counts have the wrong length");
  }
  if (!theta0.empty() && theta0.size() != empirical.size()) {
    throw std::invalid_argument("maxent_irl: theta0 has the wrong length");
  }
  mdp.check();

  IrlResult out;
  out.theta = theta0.empty() ? std::vector<double>(empirical.size(), 0.0) : std::move(theta0);
  out.empirical.assign(empirical.begin(), empirical.end());

  // Likelihood and expected counts at theta.
  auto evaluate = [&](const std::vector<double>& theta, std::vector<double>& expected) {
    double log_z = 0.0;
    const TimePolicy pi = soft_value_iteration(mdp, theta, options.horizon, options.gamma, &log_z);
    expected = expected_feature_counts(mdp, pi, options.gamma);
    double ll = -log_z;
    for (std::size_t f = 0; f < theta.size(); ++f) {
      ll += theta[f] * out.empirical[f] - 0.5 * options.l2 * theta[f] * theta[f];
    }
    return ll;
  };

  const std::size_t F = out.theta.size();
  double ll = evaluate(out.theta, out.expected);
  out.gap_trace.push_back(gap_norm(out.empirical, out.expected));
  double damping = 1.0 / options.learning_rate;
  std::vector<double> grad(F), step(F), trial(F), trial_expected, probe_expected;
  std::vector<double> hess(F * F);
  for (int it = 0; it < options.iters; ++it) {
    double grad_norm = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      grad[f] = out.empirical[f] - out.expected[f] - options.l2 * out.theta[f];
      grad_norm = std::max(grad_norm, std::abs(grad[f]));
      if (!std::isfinite(grad[f])) throw IrlError(it, "non-finite gradient in component " + std::to_string(f));
    }
    if (grad_norm <= options.tolerance) break;
    // Hessian of log Z is the Jacobian of the expected counts; forward differences.
    constexpr double kProbe = 1e-5;
    for (std::size_t j = 0; j < F; ++j) {
      trial = out.theta;
      trial[j] += kProbe;
      evaluate(trial, probe_expected);
      for (std::size_t i = 0; i < F; ++i) hess[i * F + j] = (probe_expected[i] - out.expected[i]) / kProbe;
    }
    for (std::size_t i = 0; i < F; ++i) {
      for (std::size_t j = 0; j < i; ++j) hess[i * F + j] = hess[j * F + i] = 0.5 * (hess[i * F + j] + hess[j * F + i]);
    }

    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      if (!solve_damped(hess, damping + options.l2, grad, step)) {
        damping *= 10.0;
        continue;
      }
      double slope = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        trial[f] = out.theta[f] + step[f];
        slope += grad[f] * step[f];
      }
      const double trial_ll = evaluate(trial, trial_expected);
      if (std::isfinite(trial_ll) && trial_ll >= ll + 1e-4 * slope) {
        out.theta = trial;
        out.expected = trial_expected;
        ll = trial_ll;
        accepted = true;
        damping = std::max(damping * 0.1, 1e-9);
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) throw IrlError(it, "no ascent step found");
    out.gap_trace.push_back(gap_norm(out.empirical, out.expected));
  }
  return out;
}

namespace {

constexpr int kPotStatuses = 5;  // 0, 1, 2 onions, cooking, ready
constexpr int kCooking = 3;
constexpr int kReady = 4;
constexpr double kFinishProb = 1.0 / kitchen::kCookTicks;

// Unordered pair of held items, a <= b.
constexpr std::array<std::pair<Item, Item>, 10> kHands = {{
    {Item::Nothing, Item::Nothing}, {Item::Nothing, Item::Onion}, {Item::Nothing, Item::Dish},
    {Item::Nothing, Item::Soup},    {Item::Onion, Item::Onion},   {Item::Onion, Item::Dish},
    {Item::Onion, Item::Soup},      {Item::Dish, Item::Dish},     {Item::Dish, Item::Soup},
    {Item::Soup, Item::Soup},
}};

int hands_index(Item a, Item b) {
  if (b < a) std::swap(a, b);
  for (std::size_t i = 0; i < kHands.size(); ++i) {
    if (kHands[i].first == a && kHands[i].second == b) return static_cast<int>(i);
  }
  return -1;
}

// Replaces one `from` in the hand pair with `to`; -1 if nobody holds `from`.
int swap_hand(int hands, Item from, Item to) {
  auto [a, b] = kHands[static_cast<std::size_t>(hands)];
  if (a == from) return hands_index(to, b);
  if (b == from) return hands_index(a, to);
  return -1;
}

std::vector<int> stands(const kitchen::Layout& L, CellKind kind) {
  std::vector<int> out;
  for (Coord c : L.cells_of(kind)) {
    for (Coord d : {Coord{0, -1}, Coord{0, 1}, Coord{-1, 0}, Coord{1, 0}}) {
      const Coord s = c + d;
      if (L.in_bounds(s) && L.is_floor(s)) out.push_back(s.y * L.width() + s.x);
    }
  }
  return out;
}

// Shortest floor path between any stand cell of `from` and any of `to`.
int travel(const kitchen::Layout& L, CellKind from, CellKind to) {
  const auto src = stands(L, from);
  const auto dst = stands(L, to);
  std::vector<int> dist(static_cast<std::size_t>(L.width() * L.height()), -1);
  std::deque<int> queue;
  for (int s : src) {
    if (dist[static_cast<std::size_t>(s)] < 0) {
      dist[static_cast<std::size_t>(s)] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const int cur = queue.front();
    queue.pop_front();
    const Coord c{cur % L.width(), cur / L.width()};
    for (Coord d : {Coord{0, -1}, Coord{0, 1}, Coord{-1, 0}, Coord{1, 0}}) {
      const Coord n = c + d;
      if (!L.in_bounds(n) || !L.is_floor(n)) continue;
      const int i = n.y * L.width() + n.x;
      if (dist[static_cast<std::size_t>(i)] >= 0) continue;
      dist[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(cur)] + 1;
      queue.push_back(i);
    }
  }
  int best = -1;
  for (int d : dst) {
    const int v = dist[static_cast<std::size_t>(d)];
    if (v >= 0 && (best < 0 || v < best)) best = v;
  }
  return best;
}

// Two players working in parallel each need travel + 1 ticks per subtask.
double success_prob(int ticks) {
  if (ticks < 0) return 0.0;
  return std::min(1.0, 2.0 / static_cast<double>(ticks + 1));
}

}  // namespace

FeatureMdp kitchen_abstraction(const kitchen::Layout& layout) {
  const int P = static_cast<int>(layout.pots().size());
  if (P > 3) throw std::invalid_argument("kitchen_abstraction: at most 3 pots are supported");
  int pot_space = 1;
  for (int i = 0; i < P; ++i) pot_space *= kPotStatuses;

  enum Base { Idle, PickOnion, PickDish, Serve, DropOnion, DropDish, DropSoup, kBase };
  FeatureMdp mdp;
  mdp.n_states = static_cast<int>(kHands.size()) * pot_space;
  mdp.n_actions = kBase + 2 * P;
  mdp.n_features = static_cast<int>(kitchen::kNumFeatures);
  mdp.start = 0;
  mdp.outcomes.assign(static_cast<std::size_t>(mdp.n_states * mdp.n_actions), {});

  const double q_onion = success_prob(travel(layout, CellKind::Pot, CellKind::OnionDispenser));
  const double q_place = success_prob(travel(layout, CellKind::OnionDispenser, CellKind::Pot));
  const double q_dish = success_prob(travel(layout, CellKind::Pot, CellKind::DishDispenser));
  const double q_soup = success_prob(travel(layout, CellKind::DishDispenser, CellKind::Pot));
  const double q_serve = success_prob(travel(layout, CellKind::Pot, CellKind::ServingWindow));

  auto decode = [&](int s, int& hands, std::vector<int>& pots) {
    hands = s / pot_space;
    int rest = s % pot_space;
    pots.assign(static_cast<std::size_t>(P), 0);
    for (int i = 0; i < P; ++i) {
      pots[static_cast<std::size_t>(i)] = rest % kPotStatuses;
      rest /= kPotStatuses;
    }
  };
  auto encode = [&](int hands, const std::vector<int>& pots) {
    int code = 0;
    for (int i = P - 1; i >= 0; --i) code = code * kPotStatuses + pots[static_cast<std::size_t>(i)];
    return hands * pot_space + code;
  };

  std::vector<int> pots;
  for (int s = 0; s < mdp.n_states; ++s) {
    int hands = 0;
    decode(s, hands, pots);

    // Appends outcomes for "event happens with probability q": the event
    // moves to (hands2, pots2) with feature `feat`; failure keeps the state.
    // Pots that were cooking before the tick may finish either way.
    auto add = [&](int a, double q, int hands2, std::vector<int> pots2, int feat) {
      auto& outs = mdp.outcomes[static_cast<std::size_t>(s * mdp.n_actions + a)];
      std::vector<int> cooking;
      for (int i = 0; i < P; ++i) {
        if (pots[static_cast<std::size_t>(i)] == kCooking) cooking.push_back(i);
      }
      const int combos = 1 << cooking.size();
      for (int branch = 0; branch < 2; ++branch) {
        const double pb = branch == 0 ? q : 1.0 - q;
        if (pb <= 0.0) continue;
        for (int mask = 0; mask < combos; ++mask) {
          std::vector<int> next = branch == 0 ? pots2 : pots;
          double p = pb;
          for (std::size_t j = 0; j < cooking.size(); ++j) {
            const bool done = (mask >> j) & 1;
            p *= done ? kFinishProb : 1.0 - kFinishProb;
            if (done) next[static_cast<std::size_t>(cooking[j])] = kReady;
          }
          std::vector<double> phi(kitchen::kNumFeatures, 0.0);
          if (branch == 0 && feat >= 0) phi[static_cast<std::size_t>(feat)] = 1.0;
          int full = 0;
          for (int v : next) full += v >= kCooking;
          if (full >= 2) phi[static_cast<std::size_t>(Feature::BothPotsFull)] = 1.0;
          outs.push_back({encode(branch == 0 ? hands2 : hands, next), p, std::move(phi)});
        }
      }
    };

    add(Idle, 1.0, hands, pots, -1);
    if (int h = swap_hand(hands, Item::Nothing, Item::Onion); h >= 0) add(PickOnion, q_onion, h, pots, -1);
    if (int h = swap_hand(hands, Item::Nothing, Item::Dish); h >= 0) {
      add(PickDish, q_dish, h, pots, static_cast<int>(Feature::DishPickedUp));
    }
    if (int h = swap_hand(hands, Item::Soup, Item::Nothing); h >= 0) {
      add(Serve, q_serve, h, pots, static_cast<int>(Feature::SoupServed));
    }
    if (int h = swap_hand(hands, Item::Onion, Item::Nothing); h >= 0) add(DropOnion, 1.0, h, pots, -1);
    if (int h = swap_hand(hands, Item::Dish, Item::Nothing); h >= 0) add(DropDish, 1.0, h, pots, -1);
    if (int h = swap_hand(hands, Item::Soup, Item::Nothing); h >= 0) add(DropSoup, 1.0, h, pots, -1);
    for (int i = 0; i < P; ++i) {
      const int st = pots[static_cast<std::size_t>(i)];
      if (st < kCooking) {
        if (int h = swap_hand(hands, Item::Onion, Item::Nothing); h >= 0) {
          auto next = pots;
          next[static_cast<std::size_t>(i)] = st + 1 == kitchen::kPotCapacity ? kCooking : st + 1;
          add(kBase + 2 * i, q_place, h, next,
              static_cast<int>(st == 0 ? Feature::OnionInEmptyPot : Feature::OnionInPartialPot));
        }
      }
      if (st == kReady) {
        if (int h = swap_hand(hands, Item::Dish, Item::Soup); h >= 0) {
          auto next = pots;
          next[static_cast<std::size_t>(i)] = 0;
          add(kBase + 2 * i + 1, q_soup, h, next, static_cast<int>(Feature::SoupPickedFromPot));
        }
      }
    }
  }
  return mdp;
}

std::vector<double> empirical_feature_counts(std::span<const kitchen::Rollout> rollouts, int horizon, double gamma) {
  std::vector<double> out(kitchen::kNumFeatures, 0.0);
  if (rollouts.empty()) return out;
  for (const auto& r : rollouts) {
    double discount = 1.0;
    const std::size_t T = std::min(r.steps.size(), static_cast<std::size_t>(std::max(horizon, 0)));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < out.size(); ++f) out[f] += discount * r.steps[t].features.counts[f];
      discount *= gamma;
    }
  }
  for (double& v : out) v /= static_cast<double>(rollouts.size());
  return out;
}

IrlResult maxent_irl(std::span<const kitchen::Rollout> rollouts, const kitchen::Layout& layout,
                     const IrlOptions& options) {
  if (rollouts.empty()) throw std::invalid_argument("maxent_irl: no trajectories");
  IrlOptions opts = options;
  for (const auto& r : rollouts) opts.horizon = std::min(opts.horizon, static_cast<int>(r.steps.size()));
  const auto empirical = empirical_feature_counts(rollouts, opts.horizon, opts.gamma);
  return maxent_irl_mdp(kitchen_abstraction(layout), empirical, opts);
}

}  // namespace mesh::learning
