#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/agent.hpp"
#include "uavllm/world.hpp"

namespace uavllm {

enum class Strategy { kStraight, kTurn, kAltitude, kCircumnavigate };

std::string_view strategy_name(Strategy s);
/// Accepts "straight", "turn", "altitude", "circumnavigate".
Strategy parse_strategy(std::string_view name);

/// executeAgentManeuver sub-call durations.
inline constexpr double kShortQuantum = 0.5;
inline constexpr double kLongQuantum = 3.0;

bool is_admissible_quantum(double seconds);

struct ManeuverCall {
  Vec3 velocity;
  double quantum = kShortQuantum;

  friend bool operator==(const ManeuverCall&, const ManeuverCall&) = default;
};

struct ManeuverPlan {
  Strategy strategy = Strategy::kStraight;
  std::vector<Vec3> waypoints;
  std::vector<ManeuverCall> maneuver_calls;
  std::string rationale;

  friend bool operator==(const ManeuverPlan&, const ManeuverPlan&) = default;
};

struct PlanContext {
  WorldExtent extent;
  AgentLimits limits;
  /// Horizontal speed used for detour legs; defaults to the limit.
  double cruise_speed = 0.0;

  double speed() const { return cruise_speed > 0.0 ? cruise_speed : limits.max_h_speed; }
};

/// Greedy decomposition of a nominal duration into 3 s quanta then 0.5 s
/// quanta, rounding up to the next multiple of 0.5 s.
std::vector<double> quantize_round_up(double seconds);

/// Sub-calls that fly from `from` to `to` in `duration` seconds at constant
/// velocity. Whole quanta run at the nominal velocity; a fractional tail is
/// flown as one extra 0.5 s quantum at reduced speed so the calls end exactly
/// on `to`.
std::vector<ManeuverCall> decompose_leg(Vec3 from, Vec3 to, double duration);

/// Sum of quantum x velocity over the calls.
Vec3 displacement_of(std::span<const ManeuverCall> calls);

ManeuverPlan plan_straight(Vec3 start, Vec3 goal, double speed, const PlanContext& ctx);

/// Constant-altitude two-corner detour around the cube footprint inflated by
/// `margin`. The left side of travel wins ties; a side whose legs would hit
/// any of `world` is skipped.
ManeuverPlan plan_turn_bypass(Vec3 start, Vec3 goal, const Obstacle& cube, double margin,
                              const PlanContext& ctx, std::span<const Obstacle> world = {});

/// Climb for a quantized time derived only from the declared height bound,
/// cross at cruise altitude, then descend onto the goal.
ManeuverPlan plan_altitude_bypass(Vec3 start, Vec3 goal, double height_bound, double margin,
                                  double ascent_speed, const PlanContext& ctx);

/// Sampled arc around the obstacle's horizontal disc inflated by `clearance`.
/// Vertices sit on a circumscribed polygon so every chord stays outside the
/// boundary circle.
ManeuverPlan plan_circumnavigation(Vec3 start, Vec3 goal, const Obstacle& obstacle,
                                   double clearance, double arc_step, const PlanContext& ctx,
                                   std::span<const Obstacle> world = {});

/// Obstacle whose planner precondition the straight segment start->goal meets
/// first along the path, or nullptr when the segment is clear.
const Obstacle* find_blocking_obstacle(Vec3 start, Vec3 goal, std::span<const Obstacle> obstacles,
                                       double margin);

/// Centre and radius of the horizontal disc used for circumnavigation: the
/// sphere itself, or a cube's circumscribed circle.
struct Disc {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
};
Disc horizontal_disc(const Obstacle& obstacle);

nlohmann::json plan_to_json(const ManeuverPlan& plan);
ManeuverPlan plan_from_json(const nlohmann::json& j);

}  // namespace uavllm
