#include "mesh/kitchen/rollout.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace mesh::kitchen {

using nlohmann::json;

std::vector<RolloutStep> Rollout::as_pairs() const {
  std::vector<RolloutStep> out;
  out.reserve(steps.size());
  for (const auto& t : steps) out.emplace_back(t.state, t.action);
  return out;
}

std::vector<JointAction> Rollout::actions() const {
  std::vector<JointAction> out;
  out.reserve(steps.size());
  for (const auto& t : steps) out.push_back(t.action);
  return out;
}

Rollout replay(const Layout& layout, const WorldState& start, std::span<const JointAction> actions,
               std::string team_id) {
  Rollout r;
  r.team_id = std::move(team_id);
  r.steps.reserve(actions.size());
  WorldState s = start;
  for (const JointAction& a : actions) {
    StepResult res = step(layout, s, a);
    r.steps.push_back(Transition{std::move(s), a, std::move(res.events), res.features});
    s = std::move(res.next_state);
  }
  r.final_state = std::move(s);
  return r;
}

void write_trajectory_log(std::ostream& out, const Layout& layout, const Rollout& rollout,
                          const std::string& config_hash) {
  json header = {{"team_id", rollout.team_id},
                 {"layout", layout.name()},
                 {"ticks", rollout.steps.size()}};
  if (!config_hash.empty()) header["config_hash"] = config_hash;
  out << header.dump() << '\n';
  for (const auto& t : rollout.steps) {
    json events = json::array();
    for (const Event& ev : t.events) events.push_back({ev.player, to_string(ev.subtask)});
    json rec = {{"tick", t.state.tick},
                {"digest", digest_hex(t.state)},
                {"actions", {wire_name(t.action.robot), wire_name(t.action.human)}},
                {"events", events}};
    out << rec.dump() << '\n';
  }
}

Rollout read_trajectory_log(std::istream& in, const Layout& layout) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory log is empty");
  const json header = json::parse(line);
  if (header.value("layout", "") != layout.name()) {
    throw std::runtime_error("trajectory log layout '" + header.value("layout", "") +
                             "' does not match '" + layout.name() + "'");
  }
  std::vector<JointAction> actions;
  std::vector<std::string> digests;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const auto& acts = rec.at("actions");
    auto robot = action_from_wire(acts.at(0).get<std::string>());
    auto human = action_from_wire(acts.at(1).get<std::string>());
    if (!robot || !human) {
      throw std::runtime_error("bad action at tick " + std::to_string(rec.at("tick").get<long>()));
    }
    actions.push_back({*robot, *human});
    digests.push_back(rec.at("digest").get<std::string>());
  }
  Rollout r = replay(layout, initial_state(layout), actions, header.value("team_id", ""));
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    if (digest_hex(r.steps[i].state) != digests[i]) {
      throw std::runtime_error("trajectory digest mismatch at tick " + std::to_string(i));
    }
  }
  return r;
}

}  // namespace mesh::kitchen
