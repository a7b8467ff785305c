#include <benchmark/benchmark.h>

#include "helpers.hpp"
#include "mesh/harness/demos.hpp"
#include "mesh/learning/featurize.hpp"
#include "mesh/moe/agent.hpp"
#include "mesh/recognition/hmm.hpp"

using namespace mesh;

namespace {

void BM_Step(benchmark::State& state) {
  const auto l = testutil::cramped();
  const auto starts = testutil::random_states(l, 256, 1);
  Rng rng = make_rng(2);
  std::size_t i = 0;
  for (auto _ : state) {
    auto r = kitchen::step(l, starts[i++ % starts.size()], testutil::random_joint(rng));
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Step);

void BM_Featurize(benchmark::State& state) {
  const auto l = testutil::cramped();
  const auto states = testutil::random_states(l, 256, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(learning::featurize(l, states[i++ % states.size()], 0));
}
BENCHMARK(BM_Featurize);

void BM_Viterbi(benchmark::State& state) {
  const auto model = recognition::random_hmm(static_cast<int>(state.range(0)), 4);
  const auto obs = recognition::sample_sequence(model, 150, 5);
  for (auto _ : state) benchmark::DoNotOptimize(recognition::viterbi_decode(model, obs));
}
BENCHMARK(BM_Viterbi)->Arg(2)->Arg(4)->Arg(6);

void BM_ObserveHuman(benchmark::State& state) {
  const auto l = testutil::cramped();
  const auto lib = testutil::blank_library(l.name(), static_cast<int>(state.range(0)));
  const auto states = testutil::random_states(l, 256, 6);
  moe::MoeAgent agent(lib, l);
  std::size_t i = 0;
  for (auto _ : state) {
    // History grows with every call, so restart each episode-length window.
    if (i % 400 == 0) agent.reset();
    agent.observe_human(states[i % states.size()], kitchen::Action::Interact);
    ++i;
  }
}
BENCHMARK(BM_ObserveHuman)->Arg(2)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
