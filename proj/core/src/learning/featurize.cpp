#include "mesh/learning/featurize.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace mesh::learning {

using kitchen::CellKind;
using kitchen::Item;

namespace {

struct Packer {
  StateKey key = 0;
  int shift = 0;
  void put(std::uint64_t value, int bits) {
    key |= (value & ((1ULL << bits) - 1)) << shift;
    shift += bits;
  }
};

struct Unpacker {
  StateKey key;
  int shift = 0;
  std::uint64_t take(int bits) {
    const std::uint64_t v = (key >> shift) & ((1ULL << bits) - 1);
    shift += bits;
    return v;
  }
};

int pot_code(const kitchen::PotState& p) {
  if (p.ready) return 5;
  if (p.cooking()) return 4;
  return p.onion_count;
}

}  // namespace

StateKey featurize(const kitchen::Layout& layout, const kitchen::WorldState& state, int seat) {
  if (layout.width() > 16 || layout.height() > 16) {
    throw std::invalid_argument("featurize: layouts wider or taller than 16 cells are not supported");
  }
  const auto& me = state.players[static_cast<std::size_t>(seat)];
  const auto& other = state.players[static_cast<std::size_t>(1 - seat)];
  Packer p;
  p.put(static_cast<std::uint64_t>(me.position.x), 4);
  p.put(static_cast<std::uint64_t>(me.position.y), 4);
  p.put(static_cast<std::uint64_t>(me.orientation), 2);
  p.put(static_cast<std::uint64_t>(me.held), 2);
  p.put(static_cast<std::uint64_t>(std::clamp(other.position.x - me.position.x, -3, 3) + 3), 3);
  p.put(static_cast<std::uint64_t>(std::clamp(other.position.y - me.position.y, -3, 3) + 3), 3);
  p.put(static_cast<std::uint64_t>(other.held), 2);

  const kitchen::Coord facing = kitchen::facing_cell(me);
  p.put(layout.in_bounds(facing) ? static_cast<std::uint64_t>(layout.at(facing)) : 0, 3);
  const auto on_counter = state.counter_objects.find(facing);
  p.put(on_counter == state.counter_objects.end() ? 0 : static_cast<std::uint64_t>(on_counter->second), 2);

  bool any[4] = {false, false, false, false};
  for (const auto& [c, item] : state.counter_objects) any[static_cast<int>(item)] = true;
  p.put(any[1], 1);
  p.put(any[2], 1);
  p.put(any[3], 1);

  for (std::size_t i = 0; i < 4; ++i) {
    p.put(i < state.pots.size() ? static_cast<std::uint64_t>(pot_code(state.pots[i])) : 0, 3);
  }
  p.put(static_cast<std::uint64_t>(seat), 1);
  return p.key;
}

std::string describe(StateKey key) {
  Unpacker u{key};
  std::ostringstream out;
  const auto x = u.take(4), y = u.take(4);
  const auto dir = static_cast<kitchen::Direction>(u.take(2));
  const auto held = static_cast<Item>(u.take(2));
  const int dx = static_cast<int>(u.take(3)) - 3, dy = static_cast<int>(u.take(3)) - 3;
  const auto partner_held = static_cast<Item>(u.take(2));
  const auto facing = static_cast<CellKind>(u.take(3));
  const auto facing_item = static_cast<Item>(u.take(2));
  const auto onion = u.take(1), dish = u.take(1), soup = u.take(1);
  out << "pos=(" << x << "," << y << ") facing=" << kitchen::to_string(dir) << " held=" << kitchen::to_string(held)
      << " partner=(" << dx << "," << dy << "," << kitchen::to_string(partner_held) << ")"
      << " front=" << kitchen::to_string(facing) << "/" << kitchen::to_string(facing_item)
      << " counters=" << onion << dish << soup << " pots=";
  for (int i = 0; i < 4; ++i) out << u.take(3);
  out << " seat=" << u.take(1);
  return out.str();
}

kitchen::WorldState relabel_seats(const kitchen::WorldState& state) {
  kitchen::WorldState out = state;
  std::swap(out.players[0], out.players[1]);
  return out;
}

}  // namespace mesh::learning
