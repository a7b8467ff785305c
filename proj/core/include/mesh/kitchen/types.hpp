#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mesh::kitchen {

enum class CellKind : std::uint8_t {
  Floor,
  Counter,
  Pot,
  OnionDispenser,
  DishDispenser,
  ServingWindow,
};

enum class Direction : std::uint8_t { North, South, West, East };

/// Per-player action set. There is no stay action; a move into a
/// non-floor cell only turns the player.
enum class Action : std::uint8_t { MoveNorth, MoveSouth, MoveWest, MoveEast, Interact };

inline constexpr std::size_t kNumActions = 5;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::MoveNorth, Action::MoveSouth, Action::MoveWest, Action::MoveEast, Action::Interact};

enum class Item : std::uint8_t { Nothing, Onion, Dish, Soup };

/// High-level interactions extracted from Interact actions.
enum class Subtask : std::uint8_t {
  PickupOnion,
  PickupDish,
  PickupSoup,
  PlaceOnion,
  PlaceDish,
  PlaceSoup,
  ServeSoup,
};

inline constexpr std::size_t kNumSubtasks = 7;

struct Coord {
  int x = 0;
  int y = 0;

  friend constexpr auto operator<=>(const Coord&, const Coord&) = default;
  friend constexpr Coord operator+(Coord a, Coord b) { return {a.x + b.x, a.y + b.y}; }
};

constexpr Coord offset(Direction d) {
  switch (d) {
    case Direction::North: return {0, -1};
    case Direction::South: return {0, 1};
    case Direction::West: return {-1, 0};
    case Direction::East: return {1, 0};
  }
  return {0, 0};
}

constexpr std::optional<Direction> move_direction(Action a) {
  switch (a) {
    case Action::MoveNorth: return Direction::North;
    case Action::MoveSouth: return Direction::South;
    case Action::MoveWest: return Direction::West;
    case Action::MoveEast: return Direction::East;
    case Action::Interact: return std::nullopt;
  }
  return std::nullopt;
}

constexpr Action move_action(Direction d) {
  return static_cast<Action>(static_cast<std::uint8_t>(d));
}

constexpr std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }
constexpr std::size_t index_of(Subtask s) { return static_cast<std::size_t>(s); }

std::string_view to_string(CellKind k);
std::string_view to_string(Direction d);
std::string_view to_string(Action a);
std::string_view to_string(Item i);
std::string_view to_string(Subtask s);

/// Wire names used by the trajectory log and the play protocol
/// ("north", "south", "west", "east", "interact").
std::string_view wire_name(Action a);
std::optional<Action> action_from_wire(std::string_view name);
std::optional<Subtask> subtask_from_string(std::string_view name);
std::optional<Item> item_from_string(std::string_view name);
std::optional<Direction> direction_from_string(std::string_view name);

}  // namespace mesh::kitchen
