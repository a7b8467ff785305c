#include "mesh/kitchen/types.hpp"

namespace mesh::kitchen {

std::string_view to_string(CellKind k) {
  switch (k) {
    case CellKind::Floor: return "Floor";
    case CellKind::Counter: return "Counter";
    case CellKind::Pot: return "Pot";
    case CellKind::OnionDispenser: return "OnionDispenser";
    case CellKind::DishDispenser: return "DishDispenser";
    case CellKind::ServingWindow: return "ServingWindow";
  }
  return "?";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::North: return "north";
    case Direction::South: return "south";
    case Direction::West: return "west";
    case Direction::East: return "east";
  }
  return "?";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::MoveNorth: return "MoveNorth";
    case Action::MoveSouth: return "MoveSouth";
    case Action::MoveWest: return "MoveWest";
    case Action::MoveEast: return "MoveEast";
    case Action::Interact: return "Interact";
  }
  return "?";
}

std::string_view to_string(Item i) {
  switch (i) {
    case Item::Nothing: return "nothing";
    case Item::Onion: return "onion";
    case Item::Dish: return "dish";
    case Item::Soup: return "soup";
  }
  return "?";
}

std::string_view to_string(Subtask s) {
  switch (s) {
    case Subtask::PickupOnion: return "PickupOnion";
    case Subtask::PickupDish: return "PickupDish";
    case Subtask::PickupSoup: return "PickupSoup";
    case Subtask::PlaceOnion: return "PlaceOnion";
    case Subtask::PlaceDish: return "PlaceDish";
    case Subtask::PlaceSoup: return "PlaceSoup";
    case Subtask::ServeSoup: return "ServeSoup";
  }
  return "?";
}

std::string_view wire_name(Action a) {
  switch (a) {
    case Action::MoveNorth: return "north";
    case Action::MoveSouth: return "south";
    case Action::MoveWest: return "west";
    case Action::MoveEast: return "east";
    case Action::Interact: return "interact";
  }
  return "?";
}

std::optional<Action> action_from_wire(std::string_view name) {
  for (Action a : kAllActions) {
    if (wire_name(a) == name || to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::optional<Subtask> subtask_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kNumSubtasks; ++i) {
    auto s = static_cast<Subtask>(i);
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<Item> item_from_string(std::string_view name) {
  for (Item i : {Item::Nothing, Item::Onion, Item::Dish, Item::Soup}) {
    if (to_string(i) == name) return i;
  }
  return std::nullopt;
}

std::optional<Direction> direction_from_string(std::string_view name) {
  for (Direction d : {Direction::North, Direction::South, Direction::West, Direction::East}) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

}  // namespace mesh::kitchen
