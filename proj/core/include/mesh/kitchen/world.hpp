#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mesh/kitchen/layout.hpp"
#include "mesh/kitchen/types.hpp"

namespace mesh::kitchen {

inline constexpr int kPotCapacity = 3;
inline constexpr int kCookTicks = 20;
inline constexpr double kServeReward = 20.0;

/// Raised when step() receives a state that is not valid for the layout.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct PlayerState {
  Coord position;
  Direction orientation = Direction::North;
  Item held = Item::Nothing;

  friend bool operator==(const PlayerState&, const PlayerState&) = default;
};

struct PotState {
  int onion_count = 0;
  int cook_timer = 0;
  bool ready = false;

  bool full() const { return onion_count == kPotCapacity; }
  bool cooking() const { return cook_timer > 0; }
  friend bool operator==(const PotState&, const PotState&) = default;
};

struct WorldState {
  std::array<PlayerState, 2> players;
  std::vector<PotState> pots;
  std::map<Coord, Item> counter_objects;
  std::int64_t tick = 0;
  std::int64_t orders_served = 0;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

WorldState initial_state(const Layout& layout);

/// Throws ContractViolation describing the first broken invariant.
void validate(const Layout& layout, const WorldState& state);

struct JointAction {
  Action robot = Action::MoveNorth;  // seat 0
  Action human = Action::MoveNorth;  // seat 1

  Action of(int seat) const { return seat == 0 ? robot : human; }
  friend bool operator==(const JointAction&, const JointAction&) = default;
};

JointAction make_joint(int seat, Action own, Action other);

/// A completed subtask. `pot` is the pot index for pot interactions, -1 otherwise.
struct Event {
  int player = 0;
  Subtask subtask = Subtask::PickupOnion;
  CellKind target = CellKind::Floor;
  int pot = -1;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class Feature : std::uint8_t {
  OnionInEmptyPot,
  OnionInPartialPot,
  DishPickedUp,
  SoupPickedFromPot,
  BothPotsFull,
  SoupServed,
};

inline constexpr std::size_t kNumFeatures = 6;
inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "onion_in_empty_pot", "onion_in_partial_pot", "dish_picked_up",
    "soup_picked_from_pot", "both_pots_full", "soup_served"};

struct FeatureVector {
  std::array<int, kNumFeatures> counts{};

  int& operator[](Feature f) { return counts[static_cast<std::size_t>(f)]; }
  int operator[](Feature f) const { return counts[static_cast<std::size_t>(f)]; }
  bool is_zero() const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct StepResult {
  WorldState next_state;
  std::vector<Event> events;
  FeatureVector features;
  double base_reward = 0.0;
};

StepResult step(const Layout& layout, const WorldState& state, JointAction actions);

FeatureVector extract_features(const WorldState& before, const WorldState& after,
                               std::span<const Event> events);

/// True when at least two pots hold a full load of onions.
bool both_pots_full(const WorldState& state);

/// The cell a player faces.
inline Coord facing_cell(const PlayerState& p) { return p.position + offset(p.orientation); }

/// Team subtask stream: the interleaved g1_t, g2_t sequence of one team.
struct SubtaskTrajectory {
  std::string team_id;
  std::vector<Subtask> symbols;
  std::vector<int> players;  // parallel to symbols

  friend bool operator==(const SubtaskTrajectory&, const SubtaskTrajectory&) = default;
};

class AnnotationError : public std::runtime_error {
 public:
  AnnotationError(std::int64_t tick, const std::string& what);
  std::int64_t tick() const { return tick_; }

 private:
  std::int64_t tick_;
};

using RolloutStep = std::pair<WorldState, JointAction>;

/// Replays a rollout and concatenates the emitted subtasks, player 0
/// before player 1 within a tick. Consecutive states must agree with step().
SubtaskTrajectory annotate_subtasks(const Layout& layout, std::span<const RolloutStep> trajectory,
                                    std::string team_id = {});

/// Canonical text serialization and its FNV-1a digest.
std::string serialize(const WorldState& state);
std::uint64_t digest(const WorldState& state);
std::string digest_hex(const WorldState& state);

}  // namespace mesh::kitchen
