#pragma once

#include <numbers>
#include <vector>

#include "uavllm/geometry.hpp"

namespace uavllm {

struct Pose {
  Vec3 position;
  double yaw = 0.0;  // (-pi, pi]
  double roll = 0.0;
  double pitch = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
  double duration = 0.0;  // seconds

  Vec3 velocity() const { return {vx, vy, vz}; }
  double horizontal_speed() const;
};

struct AgentLimits {
  double max_h_speed = 2.0;
  double max_v_speed = 1.0;  // ascent speed
  double attitude_limit = std::numbers::pi / 6.0;
};

/// Throws kLimitExceeded when the command violates the limits or has a
/// non-positive duration.
void check_command(const VelocityCommand& cmd, const AgentLimits& limits);

/// First-order kinematics: advance by velocity x min(dt, duration). Yaw follows
/// the horizontal velocity; roll and pitch are cosmetic tilts proportional to
/// the commanded fraction of max horizontal speed (vy and vx respectively).
Pose step(const Pose& pose, const VelocityCommand& cmd, double dt, const AgentLimits& limits);

struct TimedPose {
  double time = 0.0;
  Pose pose;
};

/// Piecewise-straight flight through the waypoints. Each leg runs at the
/// largest speed that respects both the horizontal and vertical limits;
/// samples are taken every dt plus one at the final arrival.
std::vector<TimedPose> follow_waypoints(const Pose& pose, const std::vector<Vec3>& waypoints,
                                        const AgentLimits& limits, double dt);

}  // namespace uavllm
