#pragma once

#include <cstdint>
#include <string>

#include "mesh/kitchen/layout.hpp"
#include "mesh/kitchen/world.hpp"

namespace mesh::learning {

/// Packed egocentric description of a state from one seat's point of view.
using StateKey = std::uint64_t;

/// Bits, low to high: own x, own y (4 each), orientation, own held (2 each),
/// partner dx, dy clipped to [-3, 3] (3 each), partner held (2), facing-cell
/// kind (3), item on the faced counter (2), any onion/dish/soup on a counter
/// (3), first four pots as 0-3 onions, cooking or ready (3 each), seat (1).
StateKey featurize(const kitchen::Layout& layout, const kitchen::WorldState& state, int seat);

/// Human-readable expansion of a key, for debugging and the CLI.
std::string describe(StateKey key);

/// Swaps every player-indexed field. An involution.
kitchen::WorldState relabel_seats(const kitchen::WorldState& state);

}  // namespace mesh::learning
