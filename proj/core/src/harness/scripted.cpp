#include "mesh/harness/scripted.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

namespace mesh::harness {

using kitchen::CellKind;
using kitchen::Coord;
using kitchen::Direction;
using kitchen::Item;

namespace {

constexpr std::array<Direction, 4> kDirs = {Direction::North, Direction::South, Direction::West,
                                            Direction::East};
constexpr int kUnreached = std::numeric_limits<int>::max();

struct Bfs {
  int width = 0;
  std::vector<int> dist;
  std::vector<int> first;  // index into kDirs of the first move, -1 at the start

  int at(Coord c) const { return dist[static_cast<std::size_t>(c.y * width + c.x)]; }
  int first_at(Coord c) const { return first[static_cast<std::size_t>(c.y * width + c.x)]; }
};

Bfs bfs(const Layout& layout, Coord start, std::optional<Coord> blocked) {
  Bfs b;
  b.width = layout.width();
  const auto n = static_cast<std::size_t>(layout.width() * layout.height());
  b.dist.assign(n, kUnreached);
  b.first.assign(n, -1);
  auto idx = [&](Coord c) { return static_cast<std::size_t>(c.y * layout.width() + c.x); };
  std::deque<Coord> q;
  b.dist[idx(start)] = 0;
  q.push_back(start);
  while (!q.empty()) {
    Coord c = q.front();
    q.pop_front();
    for (std::size_t d = 0; d < kDirs.size(); ++d) {
      Coord nb = c + kitchen::offset(kDirs[d]);
      if (!layout.is_floor(nb) || (blocked && nb == *blocked)) continue;
      if (b.dist[idx(nb)] != kUnreached) continue;
      b.dist[idx(nb)] = b.dist[idx(c)] + 1;
      b.first[idx(nb)] = c == start ? static_cast<int>(d) : b.first[idx(c)];
      q.push_back(nb);
    }
  }
  return b;
}

int count_held(const WorldState& s, Item item) {
  return static_cast<int>(std::count_if(s.players.begin(), s.players.end(),
                                        [&](const auto& p) { return p.held == item; }));
}

int count_on_counters(const WorldState& s, Item item) {
  return static_cast<int>(std::count_if(s.counter_objects.begin(), s.counter_objects.end(),
                                        [&](const auto& kv) { return kv.second == item; }));
}

int pot_room(const WorldState& s) {
  int room = 0;
  for (const auto& pot : s.pots) {
    if (!pot.full()) room += kitchen::kPotCapacity - pot.onion_count;
  }
  return room;
}

int dish_demand(const WorldState& s, bool early) {
  int pots = 0;
  for (const auto& pot : s.pots) {
    if (pot.full() || (early && pot.onion_count > 0)) ++pots;
  }
  return pots - count_held(s, Item::Dish) - count_on_counters(s, Item::Dish);
}

int manhattan(Coord a, Coord b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

int nearest_of(const Layout& layout, Coord c, CellKind kind) {
  int best = kUnreached;
  for (Coord t : layout.cells_of(kind)) best = std::min(best, manhattan(c, t));
  return best;
}

std::vector<bool> reachable_from(const Layout& layout, Coord start) {
  Bfs b = bfs(layout, start, std::nullopt);
  std::vector<bool> out(b.dist.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.dist[i] != kUnreached;
  return out;
}

}  // namespace

void ScriptedStrategy::check() const {
  if (!(noise >= 0.0 && noise <= 0.3)) {
    throw std::invalid_argument("strategy '" + name + "': noise must lie in [0, 0.3]");
  }
  for (const auto& seat : seats) {
    if (seat.priorities.empty()) throw std::invalid_argument("strategy '" + name + "': empty priority list");
  }
}

const std::vector<ScriptedStrategy>& builtin_strategies() {
  static const std::vector<ScriptedStrategy> strategies = [] {
    std::vector<ScriptedStrategy> out;
    out.push_back({"role_specialist",
                   {SeatRule{{Goal::OnionToPot, Goal::FetchOnionDispenser}, PotChoice::Fullest, false},
                    SeatRule{{Goal::SoupToWindow, Goal::DishToPot, Goal::FetchDishDispenser},
                             PotChoice::Fullest, true}},
                   0.02});
    const SeatRule generalist{{Goal::SoupToWindow, Goal::DishToPot, Goal::OnionToPot,
                               Goal::FetchDishDispenser, Goal::FetchOnionDispenser},
                              PotChoice::Nearest,
                              false};
    out.push_back({"complete_as_needed", {generalist, generalist}, 0.02});
    out.push_back({"counter_relay",
                   {SeatRule{{Goal::SoupToWindow, Goal::OnionToCounter, Goal::FetchSoupCounter,
                              Goal::FetchOnionDispenser},
                             PotChoice::Fullest, false},
                    SeatRule{{Goal::OnionToPot, Goal::DishToPot, Goal::SoupToCounter,
                              Goal::FetchOnionCounter, Goal::FetchDishDispenser},
                             PotChoice::Fullest, false}},
                   0.02});
    out.push_back({"soup_handoff",
                   {SeatRule{{Goal::OnionToPot, Goal::DishToPot, Goal::SoupToCounter,
                              Goal::FetchDishDispenser, Goal::FetchOnionDispenser},
                             PotChoice::Fullest, false},
                    SeatRule{{Goal::SoupToWindow, Goal::FetchSoupCounter}, PotChoice::Fullest, false}},
                   0.02});
    return out;
  }();
  return strategies;
}

ScriptedStrategy builtin_strategy(const std::string& name) {
  for (const auto& s : builtin_strategies()) {
    if (s.name == name) return s;
  }
  throw std::invalid_argument("unknown scripted strategy '" + name + "'");
}

ScriptedAgent::ScriptedAgent(const Layout& layout, SeatRule rule, int seat, double noise)
    : layout_(&layout), rule_(std::move(rule)), seat_(seat), noise_(noise) {
  const auto r0 = reachable_from(layout, layout.start_positions()[0]);
  const auto r1 = reachable_from(layout, layout.start_positions()[1]);
  for (Coord c : layout.cells_of(CellKind::Counter)) {
    bool by0 = false, by1 = false;
    for (Direction d : kDirs) {
      Coord nb = c + kitchen::offset(d);
      if (!layout.is_floor(nb)) continue;
      const auto i = static_cast<std::size_t>(nb.y * layout.width() + nb.x);
      by0 = by0 || r0[i];
      by1 = by1 || r1[i];
    }
    if (by0 && by1) shared_counters_.push_back(c);
  }
}

bool ScriptedAgent::applicable(Goal g, const WorldState& s, std::vector<Target>& targets) const {
  const auto& me = s.players[static_cast<std::size_t>(seat_)];
  const Layout& L = *layout_;
  targets.clear();

  auto pots_where = [&](auto pred, auto priority) {
    for (std::size_t i = 0; i < s.pots.size(); ++i) {
      if (pred(s.pots[i])) targets.push_back({L.pots()[i], priority(s.pots[i])});
    }
  };
  auto empty_counters_near = [&](CellKind anchor) {
    for (Coord c : shared_counters_) {
      if (!s.counter_objects.contains(c)) targets.push_back({c, nearest_of(L, c, anchor)});
    }
  };
  auto counters_with = [&](Item item) {
    for (const auto& [c, it] : s.counter_objects) {
      if (it == item) targets.push_back({c, 0});
    }
  };
  auto cells = [&](CellKind kind) {
    for (Coord c : L.cells_of(kind)) targets.push_back({c, 0});
  };
  const bool empty = me.held == Item::Nothing;

  switch (g) {
    case Goal::OnionToPot:
      if (me.held != Item::Onion) return false;
      pots_where([](const auto& p) { return !p.full(); },
                 [&](const auto& p) { return rule_.pot_choice == PotChoice::Fullest ? -p.onion_count : 0; });
      break;
    case Goal::OnionToCounter:
      if (me.held != Item::Onion) return false;
      empty_counters_near(CellKind::Pot);
      break;
    case Goal::DishToPot:
      if (me.held != Item::Dish) return false;
      // Waiting at a pot that is still filling blocks the onion carrier.
      pots_where([](const auto& p) { return p.ready || p.cooking(); },
                 [](const auto& p) { return p.ready ? 0 : 1; });
      break;
    case Goal::DishToCounter:
      if (me.held != Item::Dish) return false;
      empty_counters_near(CellKind::Pot);
      break;
    case Goal::SoupToWindow:
      if (me.held != Item::Soup) return false;
      cells(CellKind::ServingWindow);
      break;
    case Goal::SoupToCounter:
      if (me.held != Item::Soup) return false;
      empty_counters_near(CellKind::ServingWindow);
      break;
    case Goal::FetchOnionDispenser:
      if (!empty) return false;
      if (pot_room(s) - count_held(s, Item::Onion) - count_on_counters(s, Item::Onion) <= 0) return false;
      cells(CellKind::OnionDispenser);
      break;
    case Goal::FetchOnionCounter:
      if (!empty) return false;
      if (pot_room(s) - count_held(s, Item::Onion) <= 0) return false;
      counters_with(Item::Onion);
      break;
    case Goal::FetchDishDispenser:
      if (!empty) return false;
      if (dish_demand(s, rule_.early_dish) <= 0) return false;
      cells(CellKind::DishDispenser);
      break;
    case Goal::FetchDishCounter:
      if (!empty) return false;
      if (dish_demand(s, rule_.early_dish) + count_on_counters(s, Item::Dish) <= 0) return false;
      counters_with(Item::Dish);
      break;
    case Goal::FetchSoupCounter:
      if (!empty) return false;
      counters_with(Item::Soup);
      break;
  }
  return !targets.empty();
}

namespace {

// Stand still by pressing against a non-floor neighbour.
std::optional<Action> hold_still(const Layout& L, const kitchen::PlayerState& me) {
  if (!L.is_floor(kitchen::facing_cell(me))) return kitchen::move_action(me.orientation);
  for (Direction d : kDirs) {
    if (!L.is_floor(me.position + kitchen::offset(d))) return kitchen::move_action(d);
  }
  return std::nullopt;
}

}  // namespace

std::optional<Action> ScriptedAgent::approach(const WorldState& s, const std::vector<Target>& targets,
                                              Rng& rng) const {
  const auto& me = s.players[static_cast<std::size_t>(seat_)];
  const Coord partner = s.players[static_cast<std::size_t>(1 - seat_)].position;
  const Layout& L = *layout_;

  // Already adjacent to the preferred target: face it, then interact.
  Bfs free = bfs(L, me.position, partner);
  Bfs open = bfs(L, me.position, std::nullopt);

  struct Choice {
    int priority = kUnreached;
    int dist = kUnreached;
    Coord target;
    Coord stand;
    bool via_partner = false;
  };
  std::optional<Choice> best;
  for (const Target& t : targets) {
    for (Direction d : kDirs) {
      Coord stand = t.cell + kitchen::offset(d);
      if (!L.is_floor(stand)) continue;
      int dist = free.at(stand);
      bool via_partner = false;
      if (dist == kUnreached) {
        if (open.at(stand) == kUnreached) continue;
        dist = open.at(stand) + 4;  // detour penalty when the partner is in the way
        via_partner = true;
      }
      if (!best || t.priority < best->priority || (t.priority == best->priority && dist < best->dist)) {
        best = Choice{t.priority, dist, t.cell, stand, via_partner};
      }
    }
  }
  if (!best) return std::nullopt;

  if (me.position == best->stand) {
    const Coord delta{best->target.x - me.position.x, best->target.y - me.position.y};
    for (Direction d : kDirs) {
      if (kitchen::offset(d) == delta) {
        return me.orientation == d ? Action::Interact : kitchen::move_action(d);
      }
    }
  }
  const Bfs& grid = best->via_partner ? open : free;
  const int first = grid.first_at(best->stand);
  if (first < 0) return std::nullopt;
  const Direction step_dir = kDirs[static_cast<std::size_t>(first)];
  if (best->via_partner && me.position + kitchen::offset(step_dir) == partner && uniform01(rng) < 0.5) {
    return kitchen::kAllActions[uniform_index(rng, 4)];
  }
  // Both players stepping into the same cell cancel each other out, and two
  // players detouring around each other can mirror forever; holding back at
  // random breaks the symmetry.
  const Coord next = me.position + kitchen::offset(step_dir);
  const bool detouring = !best->via_partner && open.at(best->stand) < free.at(best->stand);
  if (((seat_ == 1 && manhattan(next, partner) == 1) || detouring) && uniform01(rng) < 0.5) {
    if (auto still = hold_still(L, me)) return *still;
  }
  return kitchen::move_action(step_dir);
}

Action ScriptedAgent::idle_action(const WorldState& s, Rng& rng) const {
  const auto& me = s.players[static_cast<std::size_t>(seat_)];
  const Coord partner = s.players[static_cast<std::size_t>(1 - seat_)].position;
  // Step aside when standing next to the partner so idling never blocks it.
  // The choice is random so two players cannot mirror each other forever.
  if (manhattan(me.position, partner) == 1) {
    std::vector<Direction> away;
    for (Direction d : kDirs) {
      const Coord nb = me.position + kitchen::offset(d);
      if (layout_->is_floor(nb) && nb != partner) away.push_back(d);
    }
    if (!away.empty() && uniform01(rng) < 0.75) return kitchen::move_action(away[uniform_index(rng, away.size())]);
  }
  if (auto still = hold_still(*layout_, me)) return *still;
  return kitchen::kAllActions[uniform_index(rng, 4)];
}

Action ScriptedAgent::planned_action(const WorldState& s, Rng& rng) const {
  std::vector<Target> targets;
  for (Goal g : rule_.priorities) {
    if (!applicable(g, s, targets)) continue;
    if (auto a = approach(s, targets, rng)) return *a;
  }
  // Items left on counters (noise, or a partner's parked item) are picked
  // back up so they never starve the kitchen.
  // A seat that stages an item never fetches that item back.
  const auto has_goal = [&](Goal g) {
    return std::find(rule_.priorities.begin(), rule_.priorities.end(), g) != rule_.priorities.end();
  };
  const std::pair<Goal, Goal> recover[] = {{Goal::FetchSoupCounter, Goal::SoupToCounter},
                                           {Goal::FetchOnionCounter, Goal::OnionToCounter},
                                           {Goal::FetchDishCounter, Goal::DishToCounter}};
  for (const auto& [g, staging] : recover) {
    if (has_goal(staging) || !applicable(g, s, targets)) continue;
    if (auto a = approach(s, targets, rng)) return *a;
  }
  const auto& me = s.players[static_cast<std::size_t>(seat_)];
  const bool soup_coming = std::any_of(s.pots.begin(), s.pots.end(), [](const auto& p) { return p.onion_count > 0; });
  // A pure plater waits with its dish; anyone who also fetches onions parks it.
  const bool fetches_onions = has_goal(Goal::FetchOnionDispenser) || has_goal(Goal::FetchOnionCounter);
  if (me.held == Item::Dish && soup_coming && has_goal(Goal::DishToPot) && !fetches_onions) return idle_action(s, rng);
  if (me.held != Item::Nothing) {
    // Nothing useful to do with the held item: park it on a free counter.
    targets.clear();
    for (Coord c : layout_->cells_of(CellKind::Counter)) {
      if (!s.counter_objects.contains(c)) targets.push_back({c, 0});
    }
    if (auto a = approach(s, targets, rng)) return *a;
  }
  return idle_action(s, rng);
}

Action ScriptedAgent::act(const WorldState& s, Rng& rng) const {
  if (noise_ > 0.0 && uniform01(rng) < noise_) return kitchen::kAllActions[uniform_index(rng, kitchen::kNumActions)];
  return planned_action(s, rng);
}

}  // namespace mesh::harness
