#include "uavllm/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uavllm/error.hpp"

namespace uavllm {

namespace {

constexpr double kSpeedSlack = 1e-9;
constexpr double kWaypointTolerance = 0.05;

}  // namespace

double VelocityCommand::horizontal_speed() const { return std::hypot(vx, vy); }

void check_command(const VelocityCommand& cmd, const AgentLimits& limits) {
  if (!std::isfinite(cmd.vx) || !std::isfinite(cmd.vy) || !std::isfinite(cmd.vz) ||
      !(cmd.duration > 0.0) || !std::isfinite(cmd.duration)) {
    throw Error(ErrorCode::kLimitExceeded, "command needs finite velocities and a positive duration");
  }
  if (cmd.horizontal_speed() > limits.max_h_speed + kSpeedSlack) {
    throw Error(ErrorCode::kLimitExceeded,
                "horizontal speed " + std::to_string(cmd.horizontal_speed()) + " exceeds " +
                    std::to_string(limits.max_h_speed) + " m/s");
  }
  if (std::abs(cmd.vz) > limits.max_v_speed + kSpeedSlack) {
    throw Error(ErrorCode::kLimitExceeded, "vertical speed " + std::to_string(std::abs(cmd.vz)) +
                                               " exceeds " + std::to_string(limits.max_v_speed) +
                                               " m/s");
  }
}

Pose step(const Pose& pose, const VelocityCommand& cmd, double dt, const AgentLimits& limits) {
  check_command(cmd, limits);
  if (!(dt > 0.0)) throw Error(ErrorCode::kLimitExceeded, "time step must be positive");
  const double t = std::min(dt, cmd.duration);
  Pose next = pose;
  next.position = pose.position + cmd.velocity() * t;
  const double h = cmd.horizontal_speed();
  if (h > 0.0) next.yaw = wrap_angle(std::atan2(cmd.vy, cmd.vx));
  const double lim = limits.attitude_limit;
  next.pitch = std::clamp(lim * cmd.vx / limits.max_h_speed, -lim, lim);
  next.roll = std::clamp(lim * cmd.vy / limits.max_h_speed, -lim, lim);
  return next;
}

std::vector<TimedPose> follow_waypoints(const Pose& pose, const std::vector<Vec3>& waypoints,
                                        const AgentLimits& limits, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kLimitExceeded, "time step must be positive");
  if (waypoints.empty()) throw Error(ErrorCode::kInvalidArguments, "no waypoints");

  struct Leg {
    double t0;
    double t1;
    Vec3 from;
    Vec3 to;
  };
  std::vector<Leg> legs;
  double clock = 0.0;
  Vec3 at = pose.position;
  for (const Vec3& wp : waypoints) {
    const Vec3 d = wp - at;
    if (d.norm() <= kWaypointTolerance * 1e-3) continue;
    const double duration = std::max(d.norm_xy() / limits.max_h_speed,
                                     std::abs(d.z) / limits.max_v_speed);
    legs.push_back({clock, clock + duration, at, wp});
    clock += duration;
    at = wp;
  }

  std::vector<TimedPose> out;
  Pose current = pose;
  out.push_back({0.0, current});
  if (legs.empty()) return out;

  const double total = clock;
  std::size_t leg = 0;
  auto position_at = [&](double t) {
    while (leg + 1 < legs.size() && t > legs[leg].t1) ++leg;
    const Leg& l = legs[leg];
    const double span = l.t1 - l.t0;
    const double s = span > 0.0 ? std::clamp((t - l.t0) / span, 0.0, 1.0) : 1.0;
    return std::pair{l.from + (l.to - l.from) * s, (l.to - l.from) * (1.0 / span)};
  };

  for (long k = 1;; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, total);
    const auto [p, v] = position_at(t);
    current.position = p;
    const double h = v.norm_xy();
    if (h > 0.0) current.yaw = wrap_angle(std::atan2(v.y, v.x));
    const double lim = limits.attitude_limit;
    current.pitch = std::clamp(lim * v.x / limits.max_h_speed, -lim, lim);
    current.roll = std::clamp(lim * v.y / limits.max_h_speed, -lim, lim);
    out.push_back({t, current});
    if (t >= total) break;
  }
  out.back().pose.position = legs.back().to;
  return out;
}

}  // namespace uavllm
