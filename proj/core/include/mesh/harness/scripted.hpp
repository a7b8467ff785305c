#pragma once

#include <array>
#include <string>
#include <vector>

#include "mesh/kitchen/layout.hpp"
#include "mesh/kitchen/world.hpp"
#include "mesh/util/random.hpp"

namespace mesh::harness {

using kitchen::Action;
using kitchen::Layout;
using kitchen::WorldState;

/// Goals a scripted player can pursue, evaluated in priority order. A goal
/// applies when its precondition holds and it has a reachable target.
enum class Goal : std::uint8_t {
  OnionToPot,
  OnionToCounter,
  DishToPot,
  DishToCounter,
  SoupToWindow,
  SoupToCounter,
  FetchOnionDispenser,
  FetchOnionCounter,
  FetchDishDispenser,
  FetchDishCounter,
  FetchSoupCounter,
};

enum class PotChoice : std::uint8_t { Nearest, Fullest };

struct SeatRule {
  std::vector<Goal> priorities;
  PotChoice pot_choice = PotChoice::Nearest;
  /// Fetch a dish as soon as any pot holds an onion, instead of waiting
  /// for a pot to start cooking.
  bool early_dish = false;
};

/// Hand-written team behavior standing in for recorded human dyads.
struct ScriptedStrategy {
  std::string name;
  std::array<SeatRule, 2> seats;
  double noise = 0.02;  // probability of a uniformly random action per tick

  void check() const;
};

/// "role_specialist": seat 0 only handles onions, seat 1 only plates and serves.
/// "complete_as_needed": both players take whichever task the kitchen needs next.
/// "counter_relay": seat 0 stages onions on counters and serves soup the cook
/// leaves on a counter; seat 1 cooks and plates.
/// "soup_handoff": seat 0 cooks and plates alone and leaves soup on a counter;
/// seat 1 only carries soup to the window.
const std::vector<ScriptedStrategy>& builtin_strategies();
ScriptedStrategy builtin_strategy(const std::string& name);

/// Reactive controller for one seat. Holds only precomputed geometry;
/// decisions are a function of (state, rng).
class ScriptedAgent {
 public:
  ScriptedAgent(const Layout& layout, SeatRule rule, int seat, double noise);

  Action act(const WorldState& state, Rng& rng) const;

  /// The action chosen with noise disabled.
  Action planned_action(const WorldState& state, Rng& rng) const;

  int seat() const { return seat_; }

 private:
  struct Target {
    kitchen::Coord cell;
    int priority = 0;  // lower is preferred before distance
  };

  bool applicable(Goal g, const WorldState& s, std::vector<Target>& targets) const;
  std::optional<Action> approach(const WorldState& s, const std::vector<Target>& targets, Rng& rng) const;
  Action idle_action(const WorldState& s, Rng& rng) const;

  const Layout* layout_;
  SeatRule rule_;
  int seat_;
  double noise_;
  std::vector<kitchen::Coord> shared_counters_;
};

}  // namespace mesh::harness
