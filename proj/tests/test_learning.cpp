#include <doctest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "helpers.hpp"
#include "mesh/harness/demos.hpp"
#include "mesh/learning/featurize.hpp"
#include "mesh/learning/irl.hpp"
#include "mesh/learning/tabular.hpp"

using namespace mesh;
using namespace mesh::learning;
using kitchen::Action;
using testutil::cramped;

TEST_CASE("relabel_seats is an involution") {
  const auto l = cramped();
  for (const auto& s : testutil::random_states(l, 1000, 21)) {
    const auto r = relabel_seats(s);
    CHECK(r.players[0] == s.players[1]);
    CHECK(r.players[1] == s.players[0]);
    CHECK(relabel_seats(r) == s);
  }
}

TEST_CASE("relabel_seats commutes with step under an action swap") {
  const auto l = cramped();
  Rng rng = make_rng(5);
  int checked = 0, contested = 0;
  for (const auto& s : testutil::random_states(l, 3000, 22, 20)) {
    const auto a = testutil::random_joint(rng);
    const auto lhs = relabel_seats(kitchen::step(l, s, a).next_state);
    const auto rhs = kitchen::step(l, relabel_seats(s), {a.human, a.robot}).next_state;
    const bool same_target = a.robot == Action::Interact && a.human == Action::Interact &&
                             kitchen::facing_cell(s.players[0]) == kitchen::facing_cell(s.players[1]);
    if (same_target) {
      ++contested;  // seat 0 wins ties, so this case is not symmetric
      continue;
    }
    CHECK(lhs == rhs);
    ++checked;
  }
  CHECK(checked > 2500);
  CHECK(contested < 100);
}

TEST_CASE("the human-seat view equals the relabeled robot-seat view") {
  const auto l = cramped();
  const auto states = testutil::random_states(l, 500, 23);
  const StateKey bit = featurize(l, states[0], 1) ^ featurize(l, relabel_seats(states[0]), 0);
  CHECK(std::popcount(bit) == 1);
  for (const auto& s : states) {
    CHECK((featurize(l, s, 1) ^ featurize(l, relabel_seats(s), 0)) == bit);
    CHECK((featurize(l, s, 0) ^ featurize(l, relabel_seats(s), 1)) == bit);
  }
}

TEST_CASE("featurize depends only on the state and seat") {
  const auto l = cramped();
  for (const auto& s : testutil::random_states(l, 200, 24)) {
    auto t = s;
    t.tick += 17;
    t.orders_served += 3;
    CHECK(featurize(l, s, 0) == featurize(l, t, 0));
    CHECK(!describe(featurize(l, s, 1)).empty());
  }
}

namespace {

Sample at(StateKey key, Action a) { return {key, a}; }

}  // namespace

TEST_CASE("behavior cloning") {
  SUBCASE("single mode") {
    std::vector<Sample> data(40, at(77, Action::MoveEast));
    const BCModel m = behavior_cloning(data, 1);
    const auto p = m.probs(77);
    CHECK(p[kitchen::index_of(Action::MoveEast)] >= 0.95);
    CHECK(testutil::is_distribution(p));
    for (double x : p) CHECK(x > 0.0);
  }
  SUBCASE("even split") {
    std::vector<Sample> data;
    for (StateKey k : {StateKey{3}, StateKey{4}}) {
      for (int i = 0; i < 20; ++i) data.push_back(at(k, i % 2 ? Action::MoveNorth : Action::Interact));
    }
    const BCModel m = behavior_cloning(data, 1);
    for (StateKey k : {StateKey{3}, StateKey{4}}) {
      const auto p = m.probs(k);
      CHECK(std::abs(p[0] - 0.5) <= 0.05);
      CHECK(std::abs(p[4] - 0.5) <= 0.05);
    }
  }
  SUBCASE("unseen states are uniform") {
    const BCModel m = behavior_cloning(std::vector<Sample>{at(1, Action::MoveWest)}, 0);
    CHECK(m.probs(999) == kUniform);
  }
  SUBCASE("no data") { CHECK_THROWS_AS(behavior_cloning(std::vector<Sample>{}, 1), std::invalid_argument); }
  SUBCASE("fine-tuning toward interacting at pots raises Interact there") {
    const auto l = cramped();
    std::vector<harness::ScriptedStrategy> all;
    for (const auto& s : harness::builtin_strategies()) all.push_back(s);
    const auto demos = harness::generate_demos(l, all, 4, 150, 31);
    const auto samples = seat_samples(l, demos.rollouts, 1);
    const BCModel aggregate = behavior_cloning(samples, 1);

    // Cluster data: the same pot-facing states, always answered with Interact.
    std::vector<Sample> cluster;
    std::set<StateKey> pot_keys;
    for (const auto& r : demos.rollouts) {
      for (const auto& t : r.steps) {
        const auto& p = t.state.players[1];
        const auto cell = kitchen::facing_cell(p);
        if (l.in_bounds(cell) && l.at(cell) == kitchen::CellKind::Pot) {
          const StateKey k = featurize(l, t.state, 1);
          pot_keys.insert(k);
          cluster.push_back(at(k, Action::Interact));
        }
      }
    }
    REQUIRE(pot_keys.size() > 5);
    const BCModel tuned = behavior_cloning(cluster, 1, &aggregate, 0.25);
    int raised = 0;
    for (StateKey k : pot_keys) {
      const auto& c = aggregate.counts().at(k);
      const bool saturated = c[4] == c[0] + c[1] + c[2] + c[3] + c[4];
      if (saturated) {
        CHECK(tuned.probs(k)[4] == doctest::Approx(aggregate.probs(k)[4]));
      } else {
        CHECK(tuned.probs(k)[4] > aggregate.probs(k)[4]);
        ++raised;
      }
    }
    CHECK(raised > 0);
  }
}

TEST_CASE("policy and model queries are distributions") {
  const auto l = cramped();
  std::vector<Sample> data;
  Rng rng = make_rng(3);
  const auto states = testutil::random_states(l, 400, 25);
  for (std::size_t i = 0; i < states.size(); i += 2) {
    data.push_back(at(featurize(l, states[i], 1), kitchen::kAllActions[uniform_index(rng, 5)]));
  }
  const BCModel m = behavior_cloning(data, 1);
  Policy p = Policy::from_bc(m);
  for (auto& [_, row] : p.table()) row[uniform_index(rng, 5)] += 30.0 * uniform01(rng);
  for (const auto& s : states) {
    for (int seat = 0; seat < 2; ++seat) {
      CHECK(testutil::is_distribution(m.probs(l, s, seat)));
      CHECK(testutil::is_distribution(p.probs(l, s, seat)));
    }
  }
  const Policy fresh = Policy::from_bc(m);
  for (const auto& [k, _] : m.counts()) {
    const auto a = m.probs(k), b = fresh.probs(k);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
  }
}

TEST_CASE("argmax ties go to the earlier action") {
  CHECK(argmax({0.1, 0.3, 0.3, 0.2, 0.1}) == 1);
  CHECK(argmax(kUniform) == 0);
}

namespace {

// One state, three actions: fill (phi = [1, 0]), serve (phi = [0, 1]), wait.
FeatureMdp fill_or_serve() {
  FeatureMdp m;
  m.n_states = 1;
  m.n_actions = 3;
  m.n_features = 2;
  m.outcomes = {{{0, 1.0, {1.0, 0.0}}}, {{0, 1.0, {0.0, 1.0}}}, {{0, 1.0, {0.0, 0.0}}}};
  return m;
}

// log of the sum over all 3^H action strings of exp(theta . total features).
double brute_log_z(const std::array<double, 2>& theta, int horizon) {
  int total = 1;
  for (int t = 0; t < horizon; ++t) total *= 3;
  double z = 0.0;
  for (int code = 0; code < total; ++code) {
    int c = code;
    double r = 0.0;
    for (int t = 0; t < horizon; ++t, c /= 3) {
      if (c % 3 == 0) r += theta[0];
      if (c % 3 == 1) r += theta[1];
    }
    z += std::exp(r);
  }
  return std::log(z);
}

}  // namespace

TEST_CASE("soft value iteration matches trajectory enumeration") {
  const FeatureMdp m = fill_or_serve();
  for (const auto& theta : {std::array<double, 2>{0.0, 0.0}, {1.3, -0.4}, {-2.0, 0.7}}) {
    double log_z = 0.0;
    const auto pi = soft_value_iteration(m, theta, 4, 1.0, &log_z);
    CHECK(log_z == doctest::Approx(brute_log_z(theta, 4)).epsilon(1e-12));
    const auto counts = expected_feature_counts(m, pi, 1.0);
    // Finite differences of the enumerated log Z give the expected counts.
    for (int f = 0; f < 2; ++f) {
      auto up = theta, down = theta;
      up[f] += 1e-5;
      down[f] -= 1e-5;
      const double fd = (brute_log_z(up, 4) - brute_log_z(down, 4)) / 2e-5;
      CHECK(counts[f] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("IRL sign ordering against a grid-search oracle") {
  // Demonstrations fill pots and almost never serve.
  const FeatureMdp m = fill_or_serve();
  const std::vector<double> empirical = {3.0, 0.2};
  IrlOptions opt;
  opt.horizon = 4;
  opt.gamma = 1.0;
  const IrlResult r = maxent_irl_mdp(m, empirical, opt);

  double best = -std::numeric_limits<double>::infinity();
  std::array<double, 2> arg{};
  for (int i = -300; i <= 300; ++i) {
    for (int j = -300; j <= 300; ++j) {
      const std::array<double, 2> th = {i * 0.01, j * 0.01};
      const double ll = th[0] * empirical[0] + th[1] * empirical[1] - brute_log_z(th, 4);
      if (ll > best) best = ll, arg = th;
    }
  }
  CHECK(arg[0] > arg[1]);
  CHECK(r.theta[0] > r.theta[1]);
  CHECK(r.theta[0] == doctest::Approx(arg[0]).epsilon(0.02));
  CHECK(r.theta[1] == doctest::Approx(arg[1]).epsilon(0.02));
  CHECK(r.gap_trace.back() <= 1e-5);
}

TEST_CASE("IRL with zero-length demonstrations leaves theta unchanged") {
  const auto l = cramped();
  std::vector<kitchen::Rollout> rollouts(3);
  for (auto& r : rollouts) r.final_state = kitchen::initial_state(l);
  const IrlResult r = maxent_irl(rollouts, l);
  CHECK(r.theta == std::vector<double>(6, 0.0));
  CHECK(r.gap_trace.front() == 0.0);
  CHECK(r.gap_trace.size() == 1);
}

TEST_CASE("IRL errors") {
  const FeatureMdp m = fill_or_serve();
  IrlOptions opt;
  opt.horizon = 4;
  const std::vector<double> bad = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  try {
    maxent_irl_mdp(m, bad, opt);
    FAIL("expected an IRL error");
  } catch (const IrlError& e) {
    CHECK(e.iteration() == 0);
  }
  CHECK_THROWS_AS(maxent_irl_mdp(m, std::vector<double>{1.0}, opt), std::invalid_argument);
  FeatureMdp broken = m;
  broken.outcomes[0][0].prob = 0.5;
  CHECK_THROWS_AS(broken.check(), std::invalid_argument);
  opt.iters = 0;
  CHECK_THROWS_AS(maxent_irl_mdp(m, std::vector<double>{1.0, 0.0}, opt), std::invalid_argument);
}

TEST_CASE("kitchen IRL") {
  const auto l = cramped();
  const FeatureMdp abstraction = kitchen_abstraction(l);
  abstraction.check();
  CHECK(abstraction.n_features == 6);
  CHECK(kitchen::kNumFeatures == 6);

  harness::DemoSet demos;
  for (int team = 0; team < 8; ++team) {
    demos.rollouts.push_back(harness::run_scripted_team(l, harness::builtin_strategy("role_specialist"), 150,
                                                        mix_seed(41, team)));
  }
  const auto emp = empirical_feature_counts(demos.rollouts, 150, 0.99);
  CHECK(emp.size() == 6);
  for (double x : emp) CHECK(x >= 0.0);

  // Independent count of the first demo's discounted features.
  std::vector<double> first(6, 0.0);
  double g = 1.0;
  for (const auto& t : demos.rollouts[0].steps) {
    for (std::size_t f = 0; f < 6; ++f) first[f] += g * t.features.counts[f];
    g *= 0.99;
  }
  const auto one = empirical_feature_counts(std::span(demos.rollouts).first(1), 150, 0.99);
  for (std::size_t f = 0; f < 6; ++f) CHECK(one[f] == doctest::Approx(first[f]).epsilon(1e-12));

  const IrlResult r = maxent_irl(demos.rollouts, l);
  REQUIRE(r.theta.size() == 6);
  for (double x : r.theta) CHECK(std::isfinite(x));
  CHECK(r.gap_trace.back() <= 0.1);
  const std::size_t half = r.gap_trace.size() / 2;
  for (std::size_t i = half; i + 1 < r.gap_trace.size(); ++i) CHECK(r.gap_trace[i + 1] <= r.gap_trace[i] + 1e-12);
}

TEST_CASE("abstraction rejects kitchens with too many pots") {
  const auto l = kitchen::load_layout("XPPPPX\nO1..2X\nXDXXSX\n", "four_pots");
  CHECK_THROWS(kitchen_abstraction(l));
}
