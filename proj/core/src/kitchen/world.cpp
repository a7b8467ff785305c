#include "mesh/kitchen/world.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>

namespace mesh::kitchen {

namespace {

std::string coord_text(Coord c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

std::optional<Subtask> pickup_of(Item item) {
  switch (item) {
    case Item::Onion: return Subtask::PickupOnion;
    case Item::Dish: return Subtask::PickupDish;
    case Item::Soup: return Subtask::PickupSoup;
    case Item::Nothing: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Subtask> place_of(Item item) {
  switch (item) {
    case Item::Onion: return Subtask::PlaceOnion;
    case Item::Dish: return Subtask::PlaceDish;
    case Item::Soup: return Subtask::PlaceSoup;
    case Item::Nothing: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<Event> interact(const Layout& layout, WorldState& world, int seat) {
  PlayerState& p = world.players[static_cast<std::size_t>(seat)];
  const Coord target = facing_cell(p);
  if (!layout.in_bounds(target)) return std::nullopt;
  const CellKind kind = layout.at(target);

  switch (kind) {
    case CellKind::Floor:
      return std::nullopt;
    case CellKind::OnionDispenser:
      if (p.held != Item::Nothing) return std::nullopt;
      p.held = Item::Onion;
      return Event{seat, Subtask::PickupOnion, kind, -1};
    case CellKind::DishDispenser:
      if (p.held != Item::Nothing) return std::nullopt;
      p.held = Item::Dish;
      return Event{seat, Subtask::PickupDish, kind, -1};
    case CellKind::Counter: {
      auto it = world.counter_objects.find(target);
      if (it != world.counter_objects.end()) {
        if (p.held != Item::Nothing) return std::nullopt;
        const Item item = it->second;
        world.counter_objects.erase(it);
        p.held = item;
        return Event{seat, *pickup_of(item), kind, -1};
      }
      if (p.held == Item::Nothing) return std::nullopt;
      const Item item = p.held;
      world.counter_objects.emplace(target, item);
      p.held = Item::Nothing;
      return Event{seat, *place_of(item), kind, -1};
    }
    case CellKind::Pot: {
      const int idx = layout.pot_index(target);
      PotState& pot = world.pots[static_cast<std::size_t>(idx)];
      if (p.held == Item::Onion && pot.onion_count < kPotCapacity) {
        ++pot.onion_count;
        if (pot.onion_count == kPotCapacity) pot.cook_timer = kCookTicks;
        p.held = Item::Nothing;
        return Event{seat, Subtask::PlaceOnion, kind, idx};
      }
      if (p.held == Item::Dish && pot.ready) {
        pot = PotState{};
        p.held = Item::Soup;
        return Event{seat, Subtask::PickupSoup, kind, idx};
      }
      return std::nullopt;
    }
    case CellKind::ServingWindow:
      if (p.held != Item::Soup) return std::nullopt;
      p.held = Item::Nothing;
      ++world.orders_served;
      return Event{seat, Subtask::ServeSoup, kind, -1};
  }
  return std::nullopt;
}

}  // namespace

bool FeatureVector::is_zero() const {
  return std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
}

WorldState initial_state(const Layout& layout) {
  WorldState s;
  for (std::size_t i = 0; i < 2; ++i) {
    s.players[i].position = layout.start_positions()[i];
    s.players[i].orientation = layout.start_orientations()[i];
  }
  s.pots.assign(layout.pots().size(), PotState{});
  return s;
}

void validate(const Layout& layout, const WorldState& state) {
  for (std::size_t i = 0; i < 2; ++i) {
    const Coord c = state.players[i].position;
    if (!layout.is_floor(c)) {
      throw ContractViolation("player " + std::to_string(i) + " at " + coord_text(c) +
                              " is not on a floor cell");
    }
  }
  if (state.players[0].position == state.players[1].position) {
    throw ContractViolation("players share cell " + coord_text(state.players[0].position));
  }
  if (state.pots.size() != layout.pots().size()) {
    throw ContractViolation("state has " + std::to_string(state.pots.size()) +
                            " pots, layout has " + std::to_string(layout.pots().size()));
  }
  for (std::size_t i = 0; i < state.pots.size(); ++i) {
    const PotState& pot = state.pots[i];
    const std::string where = "pot " + std::to_string(i) + ": ";
    if (pot.onion_count < 0 || pot.onion_count > kPotCapacity) {
      throw ContractViolation(where + "onion count out of range");
    }
    if (pot.cook_timer < 0 || pot.cook_timer > kCookTicks) {
      throw ContractViolation(where + "cook timer out of range");
    }
    if (pot.cook_timer > 0 && (pot.onion_count != kPotCapacity || pot.ready)) {
      throw ContractViolation(where + "cooking pot must be full and not ready");
    }
    if (pot.ready && (pot.cook_timer != 0 || pot.onion_count != kPotCapacity)) {
      throw ContractViolation(where + "ready pot must be full with a zero timer");
    }
    if (pot.onion_count == kPotCapacity && pot.cook_timer == 0 && !pot.ready) {
      throw ContractViolation(where + "full pot must be cooking or ready");
    }
  }
  for (const auto& [c, item] : state.counter_objects) {
    if (!layout.in_bounds(c) || layout.at(c) != CellKind::Counter) {
      throw ContractViolation("counter object at non-counter cell " + coord_text(c));
    }
    if (item == Item::Nothing) throw ContractViolation("empty counter entry at " + coord_text(c));
  }
  if (state.tick < 0 || state.orders_served < 0) {
    throw ContractViolation("negative clock or score");
  }
}

JointAction make_joint(int seat, Action own, Action other) {
  return seat == 0 ? JointAction{own, other} : JointAction{other, own};
}

StepResult step(const Layout& layout, const WorldState& state, JointAction actions) {
  validate(layout, state);

  StepResult result;
  WorldState& next = result.next_state;
  next = state;
  ++next.tick;

  for (PotState& pot : next.pots) {
    if (pot.cook_timer > 0 && --pot.cook_timer == 0) pot.ready = true;
  }

  const std::array<Action, 2> acts = {actions.robot, actions.human};

  // Interactions resolve first, in seat order. Two players interacting with
  // the same cell: seat 0 wins and seat 1 is a no-op.
  const bool shared_target = acts[0] == Action::Interact && acts[1] == Action::Interact &&
                             facing_cell(state.players[0]) == facing_cell(state.players[1]);
  for (int seat = 0; seat < 2; ++seat) {
    if (acts[static_cast<std::size_t>(seat)] != Action::Interact) continue;
    if (seat == 1 && shared_target) continue;
    if (auto ev = interact(layout, next, seat)) result.events.push_back(*ev);
  }

  std::array<Coord, 2> old_pos = {state.players[0].position, state.players[1].position};
  std::array<Coord, 2> new_pos = old_pos;
  for (std::size_t i = 0; i < 2; ++i) {
    auto dir = move_direction(acts[i]);
    if (!dir) continue;
    next.players[i].orientation = *dir;
    const Coord target = old_pos[i] + offset(*dir);
    if (layout.is_floor(target)) new_pos[i] = target;
  }
  const bool same_cell = new_pos[0] == new_pos[1];
  const bool swap = new_pos[0] == old_pos[1] && new_pos[1] == old_pos[0];
  if (same_cell || swap) new_pos = old_pos;
  next.players[0].position = new_pos[0];
  next.players[1].position = new_pos[1];

  result.features = extract_features(state, next, result.events);
  result.base_reward = kServeReward * result.features[Feature::SoupServed];
  return result;
}

bool both_pots_full(const WorldState& state) {
  const auto full = std::count_if(state.pots.begin(), state.pots.end(),
                                  [](const PotState& p) { return p.full(); });
  return full >= 2;
}

FeatureVector extract_features(const WorldState& before, const WorldState& after,
                               std::span<const Event> events) {
  FeatureVector f;
  for (const Event& ev : events) {
    switch (ev.subtask) {
      case Subtask::PlaceOnion:
        if (ev.target == CellKind::Pot && ev.pot >= 0 &&
            static_cast<std::size_t>(ev.pot) < before.pots.size()) {
          if (before.pots[static_cast<std::size_t>(ev.pot)].onion_count == 0) {
            ++f[Feature::OnionInEmptyPot];
          } else {
            ++f[Feature::OnionInPartialPot];
          }
        }
        break;
      case Subtask::PickupDish:
        ++f[Feature::DishPickedUp];
        break;
      case Subtask::PickupSoup:
        if (ev.target == CellKind::Pot) ++f[Feature::SoupPickedFromPot];
        break;
      case Subtask::ServeSoup:
        ++f[Feature::SoupServed];
        break;
      default:
        break;
    }
  }
  f[Feature::BothPotsFull] = both_pots_full(after) ? 1 : 0;
  return f;
}

AnnotationError::AnnotationError(std::int64_t tick, const std::string& what)
    : std::runtime_error("illegal rollout at tick " + std::to_string(tick) + ": " + what),
      tick_(tick) {}

SubtaskTrajectory annotate_subtasks(const Layout& layout, std::span<const RolloutStep> trajectory,
                                    std::string team_id) {
  SubtaskTrajectory out;
  out.team_id = std::move(team_id);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& [state, action] = trajectory[i];
    StepResult r;
    try {
      r = step(layout, state, action);
    } catch (const ContractViolation& e) {
      throw AnnotationError(static_cast<std::int64_t>(i), e.what());
    }
    if (i + 1 < trajectory.size() && !(r.next_state == trajectory[i + 1].first)) {
      throw AnnotationError(static_cast<std::int64_t>(i + 1),
                            "state does not follow from the previous step");
    }
    // step() already emits seat 0 before seat 1.
    for (const Event& ev : r.events) {
      out.symbols.push_back(ev.subtask);
      out.players.push_back(ev.player);
    }
  }
  return out;
}

std::string serialize(const WorldState& state) {
  std::ostringstream os;
  os << "t=" << state.tick << ";served=" << state.orders_served;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& p = state.players[i];
    os << ";p" << i << "=" << p.position.x << "," << p.position.y << ","
       << to_string(p.orientation) << "," << to_string(p.held);
  }
  os << ";pots=";
  for (std::size_t i = 0; i < state.pots.size(); ++i) {
    const auto& pot = state.pots[i];
    if (i) os << "|";
    os << pot.onion_count << ":" << pot.cook_timer << ":" << (pot.ready ? 1 : 0);
  }
  os << ";counters=";
  bool first = true;
  for (const auto& [c, item] : state.counter_objects) {
    if (!first) os << "|";
    first = false;
    os << c.x << "," << c.y << ":" << to_string(item);
  }
  return os.str();
}

std::uint64_t digest(const WorldState& state) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize(state)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string digest_hex(const WorldState& state) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest(state)));
  return buf;
}

}  // namespace mesh::kitchen
