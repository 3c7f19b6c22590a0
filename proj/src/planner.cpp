#include "uavllm/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <tuple>

#include "uavllm/error.hpp"

namespace uavllm {

namespace {

constexpr double kEps = 1e-9;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Frame2 {
  Vec3 origin;
  double ux, uy;  // along track
  double nx, ny;  // left normal
  double length;

  double along(double x, double y) const { return (x - origin.x) * ux + (y - origin.y) * uy; }
  double cross(double x, double y) const { return (x - origin.x) * nx + (y - origin.y) * ny; }
  Vec3 point(double a, double c, double z) const {
    return {origin.x + a * ux + c * nx, origin.y + a * uy + c * ny, z};
  }
};

Frame2 make_frame(Vec3 start, Vec3 goal) {
  const double dx = goal.x - start.x;
  const double dy = goal.y - start.y;
  const double len = std::hypot(dx, dy);
  if (len <= kEps) {
    throw Error(ErrorCode::kStrategyUnnecessary, "start and goal share a ground position");
  }
  return {start, dx / len, dy / len, -dy / len, dx / len, len};
}

void require_inside(const WorldExtent& e, Vec3 p, const char* what) {
  if (!e.contains(p)) {
    std::ostringstream msg;
    msg << what << " (" << p.x << ", " << p.y << ", " << p.z << ") is outside the world extent";
    throw Error(ErrorCode::kOutOfBounds, msg.str());
  }
}

double leg_duration(Vec3 from, Vec3 to, double h_speed, double v_speed) {
  const Vec3 d = to - from;
  return std::max(d.norm_xy() / h_speed, std::abs(d.z) / v_speed);
}

void append_legs(ManeuverPlan& plan, const PlanContext& ctx, double h_speed) {
  for (std::size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    const Vec3 a = plan.waypoints[i];
    const Vec3 b = plan.waypoints[i + 1];
    const double t = leg_duration(a, b, h_speed, ctx.limits.max_v_speed);
    auto calls = decompose_leg(a, b, t);
    plan.maneuver_calls.insert(plan.maneuver_calls.end(), calls.begin(), calls.end());
  }
}

bool polyline_inside(const std::vector<Vec3>& pts, const WorldExtent& e) {
  return std::all_of(pts.begin(), pts.end(), [&](Vec3 p) { return e.contains(p); });
}

bool polyline_collides(const std::vector<Vec3>& pts, std::span<const Obstacle> world) {
  const std::vector<Obstacle> obs(world.begin(), world.end());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (collision_check(obs, pts[i], pts[i + 1]).collided()) return true;
  }
  return false;
}

// Free distance from p to the world boundary along direction (dx, dy).
double ray_to_boundary(Vec3 p, double dx, double dy, const WorldExtent& e) {
  double t = std::numeric_limits<double>::infinity();
  if (dx > kEps) t = std::min(t, (e.x_max - p.x) / dx);
  if (dx < -kEps) t = std::min(t, (e.x_min - p.x) / dx);
  if (dy > kEps) t = std::min(t, (e.y_max - p.y) / dy);
  if (dy < -kEps) t = std::min(t, (e.y_min - p.y) / dy);
  return std::max(0.0, t);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kStraight: return "straight";
    case Strategy::kTurn: return "turn";
    case Strategy::kAltitude: return "altitude";
    case Strategy::kCircumnavigate: return "circumnavigate";
  }
  return "straight";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kStraight, Strategy::kTurn, Strategy::kAltitude,
                     Strategy::kCircumnavigate}) {
    if (strategy_name(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArguments, "unknown strategy '" + std::string(name) + "'");
}

bool is_admissible_quantum(double seconds) {
  return seconds == kShortQuantum || seconds == kLongQuantum;
}

std::vector<double> quantize_round_up(double seconds) {
  std::vector<double> out;
  if (!(seconds > kEps)) return out;
  const long halves = static_cast<long>(std::ceil(seconds / kShortQuantum - kEps));
  const long longs = halves / 6;
  const long shorts = halves % 6;
  out.assign(static_cast<std::size_t>(longs), kLongQuantum);
  out.insert(out.end(), static_cast<std::size_t>(shorts), kShortQuantum);
  return out;
}

std::vector<ManeuverCall> decompose_leg(Vec3 from, Vec3 to, double duration) {
  std::vector<ManeuverCall> calls;
  const Vec3 delta = to - from;
  if (!(duration > kEps) || delta.norm() <= kEps) return calls;
  const Vec3 v = delta * (1.0 / duration);
  const long longs = static_cast<long>(std::floor(duration / kLongQuantum + kEps));
  double rest = duration - longs * kLongQuantum;
  const long shorts = static_cast<long>(std::floor(std::max(0.0, rest) / kShortQuantum + kEps));
  rest -= shorts * kShortQuantum;
  for (long i = 0; i < longs; ++i) calls.push_back({v, kLongQuantum});
  for (long i = 0; i < shorts; ++i) calls.push_back({v, kShortQuantum});
  if (rest > kEps) calls.push_back({v * (rest / kShortQuantum), kShortQuantum});
  return calls;
}

Vec3 displacement_of(std::span<const ManeuverCall> calls) {
  Vec3 d;
  for (const ManeuverCall& c : calls) d = d + c.velocity * c.quantum;
  return d;
}

ManeuverPlan plan_straight(Vec3 start, Vec3 goal, double speed, const PlanContext& ctx) {
  require_inside(ctx.extent, start, "start");
  require_inside(ctx.extent, goal, "goal");
  if (!(speed > 0.0) || speed > ctx.limits.max_h_speed + kEps) {
    throw Error(ErrorCode::kLimitExceeded, "speed must be in (0, max_h_speed]");
  }
  ManeuverPlan plan;
  plan.strategy = Strategy::kStraight;
  plan.waypoints = {start, goal};
  append_legs(plan, ctx, speed);
  plan.rationale = "direct leg of " + fmt(distance(start, goal)) + " m";
  return plan;
}

ManeuverPlan plan_turn_bypass(Vec3 start, Vec3 goal, const Obstacle& cube, double margin,
                              const PlanContext& ctx, std::span<const Obstacle> world) {
  require_inside(ctx.extent, start, "start");
  require_inside(ctx.extent, goal, "goal");
  const Rect footprint = cube.footprint_bounds();
  if (!segment_intersects_rect_xy(start, goal, footprint)) {
    throw Error(ErrorCode::kStrategyUnnecessary,
                "straight path does not cross the footprint of " + cube.id);
  }
  const Frame2 f = make_frame(start, goal);
  const Rect inflated = footprint.inflated(std::max(0.0, margin));
  if (inflated.contains(start.x, start.y) || inflated.contains(goal.x, goal.y)) {
    throw Error(ErrorCode::kStrategyInfeasible,
                "start or goal lies inside the inflated footprint of " + cube.id);
  }
  double a_min = std::numeric_limits<double>::infinity(), a_max = -a_min;
  double c_min = a_min, c_max = -a_min;
  for (double x : {inflated.x_lo, inflated.x_hi}) {
    for (double y : {inflated.y_lo, inflated.y_hi}) {
      a_min = std::min(a_min, f.along(x, y));
      a_max = std::max(a_max, f.along(x, y));
      c_min = std::min(c_min, f.cross(x, y));
      c_max = std::max(c_max, f.cross(x, y));
    }
  }
  if (a_min <= kEps || a_max >= f.length - kEps) {
    throw Error(ErrorCode::kStrategyInfeasible,
                "no room to turn before or after " + cube.id + " along the path");
  }

  const double z = start.z;
  auto build_side = [&](double c_side) {
    const double w = std::abs(c_side);
    std::vector<Vec3> pts{start};
    if (a_min - w > kEps) pts.push_back(f.point(a_min - w, 0.0, z));
    pts.push_back(f.point(a_min, c_side, z));
    pts.push_back(f.point(a_max, c_side, z));
    if (a_max + w < f.length - kEps) {
      pts.push_back(f.point(a_max + w, 0.0, z));
    } else {
      pts.push_back({goal.x, goal.y, z});
    }
    return pts;
  };

  struct Option {
    std::vector<Vec3> pts;
    double room;
    const char* side;
  };
  std::vector<Option> options;
  for (auto [c_side, sign, side] : {std::tuple{c_max, 1.0, "left"}, std::tuple{c_min, -1.0, "right"}}) {
    auto pts = build_side(c_side);
    if (!polyline_inside(pts, ctx.extent)) continue;
    if (!world.empty() && polyline_collides(pts, world)) continue;
    // Free space beyond the two detour corners, measured outward from the path.
    const double room = std::min(
        ray_to_boundary(f.point(a_min, c_side, z), sign * f.nx, sign * f.ny, ctx.extent),
        ray_to_boundary(f.point(a_max, c_side, z), sign * f.nx, sign * f.ny, ctx.extent));
    options.push_back({std::move(pts), room, side});
  }
  if (options.empty()) {
    throw Error(ErrorCode::kStrategyInfeasible,
                "detour around " + cube.id + " leaves the world or hits an obstacle on both sides");
  }
  const Option* best = &options.front();
  if (options.size() == 2 && options[1].room > options[0].room + kEps) best = &options[1];

  ManeuverPlan plan;
  plan.strategy = Strategy::kTurn;
  plan.waypoints = best->pts;
  append_legs(plan, ctx, ctx.speed());
  plan.rationale = std::string("turn ") + best->side + " around " + cube.id + " with " +
                   fmt(margin) + " m margin at constant altitude " + fmt(z) + " m";
  return plan;
}

ManeuverPlan plan_altitude_bypass(Vec3 start, Vec3 goal, double height_bound, double margin,
                                  double ascent_speed, const PlanContext& ctx) {
  require_inside(ctx.extent, start, "start");
  require_inside(ctx.extent, goal, "goal");
  if (start.z > height_bound + margin + kEps) {
    throw Error(ErrorCode::kBoundNotAboveStart,
                "height bound " + fmt(height_bound) + " m (+" + fmt(margin) +
                    " m margin) is below the start altitude");
  }
  if (!(ascent_speed > 0.0) || ascent_speed > ctx.limits.max_v_speed + kEps) {
    throw Error(ErrorCode::kLimitExceeded, "ascent speed must be in (0, max_v_speed]");
  }
  const double nominal = (height_bound + margin - start.z) / ascent_speed;
  const std::vector<double> quanta = quantize_round_up(nominal);
  double climb_time = 0.0;
  for (double q : quanta) climb_time += q;
  const double cruise_z = start.z + ascent_speed * climb_time;
  if (cruise_z > ctx.extent.z_ceiling + kEps) {
    throw Error(ErrorCode::kCeilingExceeded,
                "cruise altitude " + fmt(cruise_z) + " m exceeds the world ceiling");
  }

  ManeuverPlan plan;
  plan.strategy = Strategy::kAltitude;
  const Vec3 climb_top{start.x, start.y, cruise_z};
  const Vec3 above_goal{goal.x, goal.y, cruise_z};
  plan.waypoints.push_back(start);
  for (double q : quanta) plan.maneuver_calls.push_back({{0.0, 0.0, ascent_speed}, q});
  if (climb_time > 0.0) plan.waypoints.push_back(climb_top);
  if (distance_xy(climb_top, above_goal) > kEps) {
    plan.waypoints.push_back(above_goal);
    auto legs = decompose_leg(climb_top, above_goal,
                              distance_xy(climb_top, above_goal) / ctx.speed());
    plan.maneuver_calls.insert(plan.maneuver_calls.end(), legs.begin(), legs.end());
  }
  if (std::abs(cruise_z - goal.z) > kEps) {
    plan.waypoints.push_back(goal);
    auto legs = decompose_leg(above_goal, goal, std::abs(cruise_z - goal.z) / ascent_speed);
    plan.maneuver_calls.insert(plan.maneuver_calls.end(), legs.begin(), legs.end());
  }
  plan.rationale = "climb " + fmt(climb_time) + " s at " + fmt(ascent_speed) +
                   " m/s to clear the declared " + fmt(height_bound) + " m bound (+" +
                   fmt(margin) + " m margin), cruise at " + fmt(cruise_z) + " m, descend";
  return plan;
}

Disc horizontal_disc(const Obstacle& obstacle) {
  if (obstacle.is_sphere()) {
    const Sphere& s = obstacle.sphere();
    return {s.center.x, s.center.y, s.radius};
  }
  const Cube& c = obstacle.cube();
  return {c.center.x, c.center.y, 0.5 * std::hypot(c.size.x, c.size.y)};
}

ManeuverPlan plan_circumnavigation(Vec3 start, Vec3 goal, const Obstacle& obstacle,
                                   double clearance, double arc_step, const PlanContext& ctx,
                                   std::span<const Obstacle> world) {
  require_inside(ctx.extent, start, "start");
  require_inside(ctx.extent, goal, "goal");
  if (!(arc_step > 0.0) || arc_step > std::numbers::pi / 2) {
    throw Error(ErrorCode::kInvalidArguments, "arc step must be in (0, pi/2]");
  }
  const Disc disc = horizontal_disc(obstacle);
  const double boundary = disc.r + std::max(0.0, clearance);
  const Vec3 centre{disc.cx, disc.cy, start.z};
  if (point_segment_distance_xy(centre, start, goal) >= boundary) {
    throw Error(ErrorCode::kStrategyUnnecessary,
                "straight path stays outside the clearance boundary of " + obstacle.id);
  }
  const Frame2 f = make_frame(start, goal);
  const double s0 = f.along(disc.cx, disc.cy);
  const double perp = f.cross(disc.cx, disc.cy);

  // The vertex radius depends on the angular step, which depends on the span
  // between the entry and exit points on that radius. Iterate to a fixed point.
  double vertex_r = boundary;
  double s_in = 0.0, s_out = 0.0, theta_in = 0.0, theta_out = 0.0, ccw_span = 0.0;
  int steps = 0;
  for (int iter = 0; iter < 8; ++iter) {
    const double half_chord = std::sqrt(std::max(0.0, vertex_r * vertex_r - perp * perp));
    s_in = s0 - half_chord;
    s_out = s0 + half_chord;
    const Vec3 p_in = f.point(s_in, 0.0, start.z);
    const Vec3 p_out = f.point(s_out, 0.0, start.z);
    theta_in = std::atan2(p_in.y - disc.cy, p_in.x - disc.cx);
    theta_out = std::atan2(p_out.y - disc.cy, p_out.x - disc.cx);
    ccw_span = std::fmod(theta_out - theta_in + 2.0 * kTwoPi, kTwoPi);
    const double span = std::min(ccw_span, kTwoPi - ccw_span);
    const int n = std::max(1, static_cast<int>(std::ceil(span / arc_step - kEps)));
    const double next_r = boundary / std::cos(0.5 * span / n);
    if (n == steps && std::abs(next_r - vertex_r) < 1e-12) break;
    steps = n;
    vertex_r = next_r;
  }
  if (s_in <= kEps || s_out >= f.length - kEps) {
    throw Error(ErrorCode::kStrategyInfeasible,
                "start or goal lies inside the clearance boundary of " + obstacle.id);
  }

  const Vec3 entry = f.point(s_in, 0.0, start.z);
  const Vec3 exit = f.point(s_out, 0.0, start.z);
  // Every vertex sits on vertex_r; a step of at most h_cap keeps each chord at
  // or beyond the boundary circle.
  const double h_cap = 2.0 * std::acos(std::min(1.0, boundary / vertex_r));
  auto build_arc = [&](bool ccw) {
    const double span = ccw ? ccw_span : kTwoPi - ccw_span;
    const double max_step = std::min(arc_step, h_cap);
    const int n = std::max(1, static_cast<int>(std::ceil(span / max_step - 1e-6)));
    const double h = span / n;
    const double sign = ccw ? 1.0 : -1.0;
    std::vector<Vec3> pts{start, entry};
    for (int k = 1; k < n; ++k) {
      const double th = theta_in + sign * k * h;
      pts.push_back({disc.cx + vertex_r * std::cos(th), disc.cy + vertex_r * std::sin(th), start.z});
    }
    pts.push_back(exit);
    return std::pair{pts, n};
  };

  const bool prefer_ccw = ccw_span <= (kTwoPi - ccw_span) + 1e-12;
  for (bool ccw : {prefer_ccw, !prefer_ccw}) {
    auto [pts, n] = build_arc(ccw);
    if (!polyline_inside(pts, ctx.extent)) continue;
    if (!world.empty() && polyline_collides(pts, world)) continue;
    ManeuverPlan plan;
    plan.strategy = Strategy::kCircumnavigate;
    plan.waypoints = std::move(pts);
    append_legs(plan, ctx, ctx.speed());
    plan.rationale = std::string("circle ") + (ccw ? "counterclockwise" : "clockwise") +
                     " around " + obstacle.id + " outside the " + fmt(boundary) +
                     " m clearance boundary in " + std::to_string(n) + " arc steps";
    return plan;
  }
  throw Error(ErrorCode::kStrategyInfeasible,
              "arc around " + obstacle.id + " leaves the world or hits another obstacle");
}

const Obstacle* find_blocking_obstacle(Vec3 start, Vec3 goal, std::span<const Obstacle> obstacles,
                                       double margin) {
  const Obstacle* best = nullptr;
  double best_t = std::numeric_limits<double>::infinity();
  const double low_z = std::min(start.z, goal.z);
  for (const Obstacle& ob : obstacles) {
    if (low_z > ob.top() + std::max(margin, ob.clearance)) continue;
    double t = std::numeric_limits<double>::infinity();
    if (ob.is_cube()) {
      if (!segment_intersects_rect_xy(start, goal, ob.footprint_bounds())) continue;
      const Vec3 c = ob.cube().center;
      t = closest_parameter({c.x, c.y, start.z}, start, {goal.x, goal.y, start.z});
    } else {
      const Disc d = horizontal_disc(ob);
      const Vec3 c{d.cx, d.cy, start.z};
      if (point_segment_distance_xy(c, start, goal) >= d.r + ob.clearance) continue;
      t = closest_parameter(c, start, {goal.x, goal.y, start.z});
    }
    if (t < best_t) {
      best_t = t;
      best = &ob;
    }
  }
  return best;
}

nlohmann::json plan_to_json(const ManeuverPlan& plan) {
  nlohmann::json j;
  j["strategy"] = strategy_name(plan.strategy);
  j["waypoints"] = nlohmann::json::array();
  for (Vec3 p : plan.waypoints) j["waypoints"].push_back(vec_to_json(p));
  j["maneuver_calls"] = nlohmann::json::array();
  for (const ManeuverCall& c : plan.maneuver_calls) {
    j["maneuver_calls"].push_back(
        {{"vx", c.velocity.x}, {"vy", c.velocity.y}, {"vz", c.velocity.z}, {"quantum", c.quantum}});
  }
  j["rationale"] = plan.rationale;
  return j;
}

ManeuverPlan plan_from_json(const nlohmann::json& j) {
  ManeuverPlan plan;
  plan.strategy = parse_strategy(j.at("strategy").get<std::string>());
  for (const auto& p : j.at("waypoints")) plan.waypoints.push_back(vec_from_json(p));
  for (const auto& c : j.at("maneuver_calls")) {
    plan.maneuver_calls.push_back({{c.at("vx").get<double>(), c.at("vy").get<double>(),
                                    c.at("vz").get<double>()},
                                   c.at("quantum").get<double>()});
  }
  plan.rationale = j.value("rationale", "");
  return plan;
}

}  // namespace uavllm
