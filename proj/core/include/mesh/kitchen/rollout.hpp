#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mesh/kitchen/world.hpp"

namespace mesh::kitchen {

struct Transition {
  WorldState state;  // before the joint action
  JointAction action;
  std::vector<Event> events;
  FeatureVector features;
};

/// A recorded episode: steps[i].state is s_i, final_state is s_T.
struct Rollout {
  std::string team_id;
  std::vector<Transition> steps;
  WorldState final_state;

  std::size_t length() const { return steps.size(); }
  const WorldState& state_after(std::size_t i) const {
    return i + 1 < steps.size() ? steps[i + 1].state : final_state;
  }
  std::vector<RolloutStep> as_pairs() const;
  std::vector<JointAction> actions() const;
};

/// Rebuilds a rollout by running step() from `start`.
Rollout replay(const Layout& layout, const WorldState& start, std::span<const JointAction> actions,
               std::string team_id = {});

/// Line-delimited trajectory log. The header line names the team and
/// layout (plus the config hash when `config_hash` is set); each following
/// line is one tick:
///   {"tick":t,"digest":"<fnv64 of s_t>","actions":["north","interact"],"events":[[0,"PickupOnion"]]}
void write_trajectory_log(std::ostream& out, const Layout& layout, const Rollout& rollout,
                          const std::string& config_hash = {});

/// Reads a log back and replays it from the layout's initial state,
/// verifying every recorded digest. Throws std::runtime_error on mismatch.
Rollout read_trajectory_log(std::istream& in, const Layout& layout);

}  // namespace mesh::kitchen
