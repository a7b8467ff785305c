#include "mesh/harness/fluency.hpp"

namespace mesh::harness {

bool is_idle(const kitchen::PlayerState& before, const kitchen::PlayerState& after) { return before == after; }

Fluency fluency_metrics(const kitchen::Rollout& rollout, int human_seat) {
  Fluency f;
  const auto h = static_cast<std::size_t>(human_seat);
  const auto r = static_cast<std::size_t>(1 - human_seat);
  for (std::size_t i = 0; i < rollout.steps.size(); ++i) {
    const auto& before = rollout.steps[i].state.players;
    const auto& after = rollout.state_after(i).players;
    const bool h_idle = is_idle(before[h], after[h]);
    const bool r_idle = is_idle(before[r], after[r]);
    ++f.ticks;
    f.human_idle += h_idle;
    f.robot_idle += r_idle;
    f.concurrent += !h_idle && !r_idle;
  }
  return f;
}

}  // namespace mesh::harness
