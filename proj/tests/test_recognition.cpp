#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "mesh/harness/demos.hpp"
#include "mesh/recognition/grid_search.hpp"

using namespace mesh;
using namespace mesh::recognition;

namespace {

// Plain forward recursion in probability space, written separately from the library.
double forward_oracle(const HmmModel& m, const std::vector<int>& obs) {
  const int n = m.n_states;
  std::vector<double> alpha(n);
  double log_scale = 0.0;
  for (int i = 0; i < n; ++i) alpha[i] = m.initial[i] * m.emission[i * kNumSymbols + obs[0]];
  for (std::size_t t = 1; t <= obs.size(); ++t) {
    double z = 0.0;
    for (double a : alpha) z += a;
    log_scale += std::log(z);
    for (double& a : alpha) a /= z;
    if (t == obs.size()) break;
    std::vector<double> next(n, 0.0);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) next[j] += alpha[i] * m.transition[i * n + j];
      next[j] *= m.emission[j * kNumSymbols + obs[t]];
    }
    alpha = next;
  }
  return log_scale;
}

// Exhaustive maximum of log P(path, obs) over all N^T paths.
double brute_force_best(const HmmModel& m, const std::vector<int>& obs) {
  const int n = m.n_states;
  const std::size_t T = obs.size();
  std::size_t total = 1;
  for (std::size_t t = 0; t < T; ++t) total *= static_cast<std::size_t>(n);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    double p = 1.0;
    int prev = -1;
    for (std::size_t t = 0; t < T; ++t) {
      const int s = static_cast<int>(c % n);
      c /= n;
      p *= (prev < 0 ? m.initial[s] : m.transition[prev * n + s]) * m.emission[s * kNumSymbols + obs[t]];
      prev = s;
    }
    best = std::max(best, std::log(p));
  }
  return best;
}

SubtaskTrajectory from_indices(const std::vector<int>& v, std::string id) {
  SubtaskTrajectory t;
  t.team_id = std::move(id);
  for (int x : v) {
    t.symbols.push_back(static_cast<Subtask>(x));
    t.players.push_back(0);
  }
  return t;
}

HmmModel two_state_model() {
  HmmModel m;
  m.n_states = 2;
  m.initial = {0.7, 0.3};
  m.transition = {0.9, 0.1, 0.2, 0.8};
  m.emission = {0.5, 0.3, 0.1, 0.05, 0.02, 0.02, 0.01,   //
                0.02, 0.03, 0.1, 0.05, 0.3, 0.2, 0.3};
  return m;
}

std::vector<SubtaskTrajectory> corpus_from(const HmmModel& m, int count, std::size_t len, std::uint64_t seed) {
  std::vector<SubtaskTrajectory> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(from_indices(sample_sequence(m, len, mix_seed(seed, i)), "team" + std::to_string(100 + i)));
  }
  return out;
}

}  // namespace

TEST_CASE("single-state forced solution") {
  SubtaskTrajectory t;
  t.team_id = "only";
  t.symbols.assign(10, Subtask::PickupOnion);
  t.players.assign(10, 0);
  const std::vector<SubtaskTrajectory> data = {t};
  const HmmFit fit = fit_hmm(data, 1, 3);
  CHECK(fit.model.b(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  for (int o = 1; o < kNumSymbols; ++o) CHECK(fit.model.b(0, o) == doctest::Approx(0.0));
  CHECK(fit.log_likelihood_trace.back() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("likelihood agrees with an independent forward pass") {
  for (int seed = 0; seed < 20; ++seed) {
    const HmmModel m = random_hmm(1 + seed % 4, seed);
    const auto obs = sample_sequence(m, 5 + seed, seed + 100);
    CHECK(log_likelihood(m, obs) == doctest::Approx(forward_oracle(m, obs)).epsilon(1e-12));
  }
}

TEST_CASE("fit beats the generating model") {
  const HmmModel truth = two_state_model();
  truth.check_stochastic();
  const auto data = corpus_from(truth, 50, 40, 5);
  const HmmFit fit = fit_hmm(data, 2, 17);
  double truth_ll = 0.0, fit_ll = 0.0;
  for (const auto& t : data) {
    truth_ll += forward_oracle(truth, symbol_indices(t));
    fit_ll += forward_oracle(fit.model, symbol_indices(t));
  }
  CHECK(fit_ll >= truth_ll);
  CHECK(fit.log_likelihood_trace.back() == doctest::Approx(fit_ll).epsilon(1e-9));
}

TEST_CASE("EM is monotone and keeps rows stochastic") {
  for (int seed = 0; seed < 8; ++seed) {
    const auto data = corpus_from(random_hmm(3, seed + 50), 12, 30, seed);
    FitOptions opt;
    opt.restarts = 2;
    const HmmFit fit = fit_hmm(data, 2 + seed % 4, seed, opt);
    fit.model.check_stochastic();
    const auto& tr = fit.log_likelihood_trace;
    REQUIRE(tr.size() >= 2);
    for (std::size_t i = 0; i + 1 < tr.size(); ++i) CHECK(tr[i + 1] >= tr[i] - 1e-8);
  }
}

TEST_CASE("fit arguments are validated") {
  const std::vector<SubtaskTrajectory> empty;
  CHECK_THROWS(fit_hmm(empty, 2, 1));
  const auto data = corpus_from(two_state_model(), 3, 10, 1);
  CHECK_THROWS(fit_hmm(data, 0, 1));
  CHECK_THROWS(fit_hmm(data, 7, 1));
  HmmModel bad = two_state_model();
  bad.transition[0] = 0.5;
  CHECK_THROWS_AS(bad.check_stochastic(), std::logic_error);
}

TEST_CASE("viterbi") {
  SUBCASE("deterministic emissions dictate the path") {
    HmmModel m;
    m.n_states = 2;
    m.initial = {0.5, 0.5};
    m.transition = {0.5, 0.5, 0.5, 0.5};
    m.emission = {1, 0, 0, 0, 0, 0, 0,  //
                  0, 1, 0, 0, 0, 0, 0};
    CHECK(viterbi_decode(m, std::vector<int>{0, 1, 1, 0, 1}) == std::vector<int>{0, 1, 1, 0, 1});
  }
  SUBCASE("one step is an argmax over initial times emission") {
    const HmmModel m = two_state_model();
    for (int o = 0; o < kNumSymbols; ++o) {
      const int expect = m.initial[0] * m.b(0, o) >= m.initial[1] * m.b(1, o) ? 0 : 1;
      CHECK(viterbi_decode(m, std::vector<int>{o}) == std::vector<int>{expect});
    }
  }
  SUBCASE("matches exhaustive enumeration") {
    for (int i = 0; i < 100; ++i) {
      const HmmModel m = random_hmm(1 + i % 3, 1000 + i);
      const auto obs = sample_sequence(m, 1 + i % 8, 2000 + i);
      const auto path = viterbi_decode(m, obs);
      REQUIRE(path.size() == obs.size());
      CHECK(path_log_probability(m, obs, path) == doctest::Approx(brute_force_best(m, obs)).epsilon(1e-9));
    }
  }
  SUBCASE("ties go to the lower state") {
    HmmModel m;
    m.n_states = 2;
    m.initial = {0.5, 0.5};
    m.transition = {0.5, 0.5, 0.5, 0.5};
    m.emission.assign(14, 1.0 / 7.0);
    CHECK(viterbi_decode(m, std::vector<int>{3, 3, 3}) == std::vector<int>{0, 0, 0});
  }
}

TEST_CASE("trimming") {
  auto seq = [](const std::string& id, std::size_t len) { return HiddenSequence{id, std::vector<int>(len, 1)}; };
  {
    const std::vector<HiddenSequence> v = {seq("a", 10), seq("b", 12), seq("c", 9)};
    const auto r = trim_sequences(v, 9);
    CHECK(r.kept.size() == 3);
    for (const auto& h : r.kept) CHECK(h.states.size() == 9);
    CHECK(r.dropped.empty());
  }
  {
    const std::vector<HiddenSequence> v = {seq("a", 5), seq("b", 12)};
    const auto r = trim_sequences(v, 9);
    CHECK(r.kept.size() == 1);
    CHECK(r.dropped == std::vector<std::string>{"a"});
  }
  {
    const std::vector<HiddenSequence> v = {seq("a", 5), seq("b", 6)};
    CHECK_THROWS(trim_sequences(v, 9));
  }
  {
    std::vector<HiddenSequence> v;
    for (std::size_t i = 0; i < 20; ++i) v.push_back(seq("t" + std::to_string(i), 10 + (i * 7) % 13));
    const std::size_t L = percentile_length(v);
    const auto r = trim_sequences(v, L);
    CHECK(r.kept.size() * 4 >= v.size() * 3);
  }
}

TEST_CASE("k-means") {
  auto h = [](const std::string& id, std::vector<int> s) { return HiddenSequence{id, std::move(s)}; };
  SUBCASE("separated duplicates") {
    const std::vector<HiddenSequence> v = {h("a", {0, 0, 1}), h("b", {0, 0, 1}), h("c", {1, 1, 0}),
                                           h("d", {1, 1, 0}), h("e", {0, 0, 1})};
    const auto r = kmeans_cluster(v, 2, 2, 4, 3);
    CHECK(r.inertia == doctest::Approx(0.0));
    CHECK(r.labels.at("a") == r.labels.at("b"));
    CHECK(r.labels.at("a") == r.labels.at("e"));
    CHECK(r.labels.at("c") == r.labels.at("d"));
    CHECK(r.labels.at("a") != r.labels.at("c"));
  }
  SUBCASE("duplicates coalesce when K is one short") {
    const std::vector<HiddenSequence> v = {h("a", {0, 1, 2}), h("b", {2, 1, 0}), h("c", {1, 1, 1}),
                                           h("d", {0, 1, 2})};
    const auto r = kmeans_cluster(v, 3, 3, 5);
    CHECK(r.labels.at("a") == r.labels.at("d"));
    std::set<int> used;
    for (const auto& [_, l] : r.labels) used.insert(l);
    CHECK(used.size() == 3);
  }
  SUBCASE("too few sequences") {
    const std::vector<HiddenSequence> v = {h("a", {0}), h("b", {1})};
    CHECK_THROWS(kmeans_cluster(v, 3, 3, 1));
  }
  SUBCASE("deterministic for a seed") {
    std::vector<Point> pts;
    Rng rng = make_rng(8);
    for (int i = 0; i < 40; ++i) pts.push_back({uniform01(rng), uniform01(rng), uniform01(rng)});
    const auto a = kmeans(pts, 4, 21);
    const auto b = kmeans(pts, 4, 21);
    CHECK(a.labels == b.labels);
    CHECK(a.inertia == b.inertia);
  }
}

TEST_CASE("silhouette") {
  SUBCASE("hand-computed 1-D example") {
    const std::vector<Point> pts = {{0}, {1}, {9}, {10}, {11}};
    const std::vector<int> labels = {0, 0, 1, 1, 1};
    const double expect = (9.0 / 10.0 + 8.0 / 9.0 + 7.0 / 8.5 + 8.5 / 9.5 + 9.0 / 10.5) / 5.0;
    CHECK(silhouette_score(pts, labels) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("far separated clouds") {
    std::vector<Point> pts;
    std::vector<int> labels;
    Rng rng = make_rng(2);
    for (int i = 0; i < 30; ++i) {
      const double base = i < 15 ? 0.0 : 100.0;
      pts.push_back({base + uniform01(rng), base + uniform01(rng)});
      labels.push_back(i < 15 ? 0 : 1);
    }
    CHECK(silhouette_score(pts, labels) > 0.9);
  }
  SUBCASE("identical points") {
    const std::vector<Point> pts(6, Point{1.0, 2.0});
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    CHECK(silhouette_score(pts, labels) == doctest::Approx(0.0));
  }
  SUBCASE("single cluster is an error") {
    const std::vector<Point> pts = {{0}, {1}};
    const std::vector<int> labels = {0, 0};
    CHECK_THROWS(silhouette_score(pts, labels));
  }
  SUBCASE("always within [-1, 1]") {
    Rng rng = make_rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Point> pts;
      std::vector<int> labels;
      for (int i = 0; i < 12; ++i) {
        pts.push_back({uniform01(rng), uniform01(rng)});
        labels.push_back(i < 3 ? i : static_cast<int>(uniform_index(rng, 3)));
      }
      const double s = silhouette_score(pts, labels);
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("adjusted Rand index") {
  const std::vector<int> a = {0, 0, 1, 1};
  const std::vector<int> b = {0, 0, 1, 2};
  CHECK(adjusted_rand_index(a, b) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  const std::vector<int> c = {5, 5, 2, 2};
  CHECK(adjusted_rand_index(a, c) == doctest::Approx(1.0));
}

namespace {

std::vector<SubtaskTrajectory> scripted_corpus(const std::vector<std::string>& names, std::uint64_t seed,
                                               std::vector<int>* planted = nullptr,
                                               std::vector<std::string>* ids = nullptr) {
  const auto layout = testutil::cramped();
  std::vector<harness::ScriptedStrategy> strategies;
  for (const auto& n : names) strategies.push_back(harness::builtin_strategy(n));
  const auto demos = harness::generate_demos(layout, strategies, 15, 150, seed);
  if (planted) *planted = demos.planted;
  if (ids) {
    for (const auto& r : demos.rollouts) ids->push_back(r.team_id);
  }
  return harness::annotate_all(layout, demos);
}

}  // namespace

TEST_CASE("grid search") {
  std::vector<int> planted;
  std::vector<std::string> ids;
  const auto data = scripted_corpus({"role_specialist", "counter_relay"}, 1, &planted, &ids);

  SUBCASE("two planted strategies give K = 2") {
    const auto r = grid_search(data, {2, 3, 4}, {2, 3, 4}, 1);
    CHECK(r.assignment.k == 2);
    std::vector<int> truth, found;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto it = r.assignment.labels.find(ids[i]);
      if (it == r.assignment.labels.end()) continue;  // trimmed away
      truth.push_back(planted[i]);
      found.push_back(it->second);
    }
    CHECK(adjusted_rand_index(truth, found) >= 0.9);

    const auto best = std::max_element(r.table.begin(), r.table.end(), [](const GridCell& x, const GridCell& y) {
      return x.silhouette < y.silhouette;
    });
    CHECK(best->silhouette == r.assignment.silhouette);
    CHECK(r.table.size() == 9);
  }
  SUBCASE("singleton grid") {
    const auto r = grid_search(data, {2}, {2}, 1);
    REQUIRE(r.table.size() == 1);
    CHECK(r.table[0].n_states == 2);
    CHECK(r.table[0].k == 2);
    CHECK(r.assignment.silhouette == r.table[0].silhouette);
  }
  SUBCASE("empty ranges") {
    CHECK_THROWS(grid_search(data, {}, {2}, 1));
    CHECK_THROWS(grid_search(data, {2}, {}, 1));
  }
  SUBCASE("dataset order does not matter") {
    auto shuffled = data;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 7, shuffled.end());
    const auto a = grid_search(data, {2, 3}, {2, 3}, 4);
    const auto b = grid_search(shuffled, {2, 3}, {2, 3}, 4);
    std::vector<int> la, lb;
    CHECK(a.assignment.labels.size() == b.assignment.labels.size());
    for (const auto& [id, label] : a.assignment.labels) {
      la.push_back(label);
      lb.push_back(b.assignment.labels.at(id));
    }
    CHECK(adjusted_rand_index(la, lb) == doctest::Approx(1.0));
  }
  SUBCASE("default trim keeps at least 75% of teams") {
    const auto r = grid_search(data, {3}, {2}, 1);
    CHECK(r.assignment.labels.size() * 4 >= data.size() * 3);
  }
}

TEST_CASE("dataset and model files round trip") {
  const auto data = corpus_from(two_state_model(), 6, 12, 9);
  std::stringstream buf;
  buf << "{\"config_hash\":\"0011223344556677\"}\n";
  write_dataset(buf, data);
  const auto back = read_dataset(buf);
  CHECK(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].team_id == data[i].team_id);
    CHECK(back[i].symbols == data[i].symbols);
  }

  RecognitionModel m;
  m.seed = 3;
  m.n_range = {2};
  m.k_range = {2};
  m.result = grid_search(data, {2}, {2}, 3);
  std::stringstream mb;
  write_model(mb, m);
  const RecognitionModel r = read_model(mb);
  CHECK(r.seed == 3);
  CHECK(r.result.model == m.result.model);
  CHECK(r.result.assignment.labels == m.result.assignment.labels);
}
