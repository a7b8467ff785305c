#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "mesh/kitchen/layout.hpp"
#include "mesh/kitchen/world.hpp"
#include "mesh/learning/library.hpp"
#include "mesh/util/random.hpp"

namespace testutil {

using namespace mesh;
using kitchen::Action;

inline kitchen::Layout cramped() { return kitchen::builtin_layout("cramped_room"); }

inline kitchen::JointAction random_joint(Rng& rng) {
  return {kitchen::kAllActions[uniform_index(rng, 5)], kitchen::kAllActions[uniform_index(rng, 5)]};
}

// States reached by a random walk from the start, so they are valid by construction.
inline std::vector<kitchen::WorldState> random_states(const kitchen::Layout& layout, std::size_t n,
                                                      std::uint64_t seed, std::size_t walk = 60) {
  Rng rng = make_rng(seed);
  std::vector<kitchen::WorldState> out;
  kitchen::WorldState s = kitchen::initial_state(layout);
  while (out.size() < n) {
    for (std::size_t i = 0, m = 1 + uniform_index(rng, walk); i < m; ++i) {
      s = kitchen::step(layout, s, random_joint(rng)).next_state;
    }
    out.push_back(s);
  }
  return out;
}

inline bool is_distribution(const learning::ActionDist& p, double tol = 1e-9) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Sets pi(.|key) to the given probabilities (zeros become a huge negative logit).
inline void set_probs(learning::Policy& policy, learning::StateKey key, const learning::ActionDist& p) {
  auto& row = policy.logits(key);
  for (std::size_t a = 0; a < row.size(); ++a) row[a] = p[a] > 0.0 ? std::log(p[a]) : -1e9;
}

// A hand-built library with K empty (uniform) strategy policies.
inline std::shared_ptr<learning::PolicyLibrary> blank_library(const std::string& layout, int k) {
  auto lib = std::make_shared<learning::PolicyLibrary>();
  lib->layout = layout;
  lib->seed = 7;
  for (int i = 0; i < k; ++i) {
    learning::StrategyPolicy sp;
    sp.cluster = i;
    sp.human = learning::BCModel(1);
    lib->strategies.push_back(sp);
  }
  lib->aggregate_human = learning::BCModel(1);
  return lib;
}

}  // namespace testutil
