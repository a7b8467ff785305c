#pragma once

#include <cstdint>

#include "mesh/kitchen/rollout.hpp"

namespace mesh::harness {

inline constexpr double kTicksPerSecond = 6.0;

struct Fluency {
  std::int64_t ticks = 0;
  std::int64_t human_idle = 0;
  std::int64_t robot_idle = 0;
  std::int64_t concurrent = 0;  // both players active

  std::int64_t human_active() const { return ticks - human_idle; }
  std::int64_t robot_active() const { return ticks - robot_idle; }
  static double seconds(std::int64_t t) { return static_cast<double>(t) / kTicksPerSecond; }
};

/// Idle means position, orientation and held item are all unchanged.
bool is_idle(const kitchen::PlayerState& before, const kitchen::PlayerState& after);

Fluency fluency_metrics(const kitchen::Rollout& rollout, int human_seat = 1);

}  // namespace mesh::harness
