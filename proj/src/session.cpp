#include <algorithm>
#include <cmath>

#include "uavllm/error.hpp"
#include "uavllm/streams.hpp"

namespace uavllm {

nlohmann::json pose_to_json(const Pose& pose) {
  return {{"position", vec_to_json(pose.position)},
          {"yaw", pose.yaw},
          {"roll", pose.roll},
          {"pitch", pose.pitch}};
}

Pose pose_from_json(const nlohmann::json& j) {
  Pose p;
  p.position = vec_from_json(j.at("position"));
  p.yaw = j.at("yaw").get<double>();
  p.roll = j.at("roll").get<double>();
  p.pitch = j.at("pitch").get<double>();
  return p;
}

nlohmann::json environment_to_json(const EnvironmentSummary& env) {
  return {{"extent",
           {{"x_min", env.extent.x_min},
            {"x_max", env.extent.x_max},
            {"y_min", env.extent.y_min},
            {"y_max", env.extent.y_max},
            {"z_ceiling", env.extent.z_ceiling}}},
          {"resolution", env.resolution},
          {"digest", env.digest},
          {"obstacle_count", env.obstacle_count},
          {"obstacle_ids", env.obstacle_ids},
          {"occupied_cells", env.occupied_cells}};
}

nlohmann::json position_report_to_json(const AgentPositionReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.neighborhood) rows.push_back({row[0], row[1], row[2]});
  return {{"pose", pose_to_json(r.pose)}, {"cell", {r.cell.ix, r.cell.iy}}, {"neighborhood", rows}};
}

nlohmann::json dimensions_to_json(const Obstacle& ob) {
  nlohmann::json j = {{"id", ob.id}, {"clearance", ob.clearance}, {"top", ob.top()}};
  if (ob.is_cube()) {
    j["shape"] = "cube";
    j["center"] = vec_to_json(ob.cube().center);
    j["size"] = vec_to_json(ob.cube().size);
  } else {
    j["shape"] = "sphere";
    j["center"] = vec_to_json(ob.sphere().center);
    j["radius"] = ob.sphere().radius;
  }
  return j;
}

nlohmann::json error_to_json(const Error& error) {
  return {{"error", error.code_name()}, {"message", error.what()}};
}

namespace {

nlohmann::json command_to_json(const VelocityCommand& c) {
  return {{"vx", c.vx}, {"vy", c.vy}, {"vz", c.vz}, {"duration", c.duration}};
}

}  // namespace

// Emits the hop records of one invocation. Downstream hops must be 1, 2, ...;
// whatever upstream hops the body did not emit are filled in on close.
class Session::Hops {
 public:
  Hops(Session& s, std::string name)
      : s_(s),
        name_(std::move(name)),
        invocation_(s.next_invocation_++),
        parent_(s.open_.empty() ? std::nullopt : std::optional(s.open_.back())) {}

  void down(int layer, nlohmann::json payload) {
    deepest_ = layer;
    record(Sense::kDownstream, layer, std::move(payload), nullptr);
  }
  void up(int layer, nlohmann::json payload) {
    last_up_ = layer;
    record(Sense::kUpstream, layer, nullptr, std::move(payload));
  }
  void close(const nlohmann::json& result, const nlohmann::json& filler) {
    for (int layer = last_up_ ? last_up_ - 1 : deepest_; layer >= 1; --layer) {
      up(layer, layer == 1 ? result : filler);
    }
  }
  std::uint64_t invocation() const { return invocation_; }

 private:
  void record(Sense sense, int layer, nlohmann::json args, nlohmann::json result) {
    StreamCall c;
    c.invocation = invocation_;
    c.parent = parent_;
    c.turn = s_.turn_;
    c.name = name_;
    c.args = std::move(args);
    c.result = std::move(result);
    c.direction = {sense, layer};
    c.sim_time = s_.sim_time_;
    s_.emit(std::move(c));
  }

  Session& s_;
  std::string name_;
  std::uint64_t invocation_;
  std::optional<std::uint64_t> parent_;
  int deepest_ = 0;
  int last_up_ = 0;
};

Session::Session(std::vector<MissionSpec> missions, SessionConfig config)
    : missions_(std::move(missions)), config_(config) {}

const MissionSpec* Session::find_mission(std::string_view id) const {
  for (const auto& m : missions_) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

void Session::emit(StreamCall call) {
  call.call_id = next_call_id_++;
  records_.push_back(std::move(call));
  if (observer_) observer_(records_.back());
}

nlohmann::json Session::run(std::string_view name, const nlohmann::json& args,
                            const std::function<nlohmann::json(Hops&)>& body) {
  Hops hops(*this, std::string(name));
  hops.down(1, args);
  open_.push_back(hops.invocation());
  try {
    nlohmann::json result = body(hops);
    open_.pop_back();
    hops.close(result, nullptr);
    return result;
  } catch (const Error& e) {
    open_.pop_back();
    hops.close(error_to_json(e), error_to_json(e));
    throw;
  }
}

void Session::require_active() const {
  if (!active_) throw Error(ErrorCode::kNoActiveMission, "no mission is active");
}

void Session::require_sensed() const {
  if (!grid_) {
    throw Error(ErrorCode::kEnvironmentNotSensed, "senseEnvironment has not been called");
  }
}

const WorldDescription& Session::require_world() const {
  if (!world_) {
    throw Error(ErrorCode::kWorldFileInvalid,
                "world of mission '" + active_->id + "' is invalid: " + world_error_);
  }
  return *world_;
}

const Obstacle& Session::require_obstacle(const std::string& id) const {
  const Obstacle* ob = require_world().find(id);
  if (!ob) throw Error(ErrorCode::kObstacleNotFound, "no obstacle with id '" + id + "'");
  return *ob;
}

std::vector<std::string> Session::start_mission(const std::string& mission_id) {
  std::vector<std::string> names;
  run("startMission", {{"mission_id", mission_id}}, [&](Hops& h) {
    if (active_) {
      throw Error(ErrorCode::kMissionAlreadyActive,
                  "mission '" + active_->id + "' is still active");
    }
    const MissionSpec* m = find_mission(mission_id);
    if (!m) throw Error(ErrorCode::kMissionNotFound, "no mission with id '" + mission_id + "'");
    h.down(2, {{"spawn", vec_to_json(m->start)}});
    active_ = m;
    world_.reset();
    grid_.reset();
    world_error_.clear();
    try {
      WorldDescription w = world_from_json(m->world_doc);
      validate_world(w.extent, w.resolution, w.obstacles);
      world_ = std::move(w);
    } catch (const Error& e) {
      world_error_ = e.what();
    }
    pose_ = Pose{};
    pose_.position = m->start;
    trajectory_.push_back({sim_time_, pose_});
    h.up(2, {{"pose", pose_to_json(pose_)}});
    names = stream_names();
    return nlohmann::json{{"streams", names}};
  });
  return names;
}

std::pair<Vec3, Vec3> Session::get_mission_coordinates() {
  std::pair<Vec3, Vec3> out;
  run("getMissionCoordinates", nlohmann::json::object(), [&](Hops&) {
    require_active();
    out = {active_->start, active_->goal};
    return nlohmann::json{{"start", vec_to_json(out.first)}, {"goal", vec_to_json(out.second)}};
  });
  return out;
}

EnvironmentSummary Session::sense_environment() {
  EnvironmentSummary env;
  run("senseEnvironment", nlohmann::json::object(), [&](Hops& h) {
    require_active();
    h.down(2, {{"request", "heightmap"}});
    h.down(3, {{"world", active_->world_ref}});
    const WorldDescription& w = require_world();
    grid_ = w.rasterize();
    env.extent = w.extent;
    env.resolution = w.resolution;
    env.digest = grid_->digest();
    env.obstacle_count = static_cast<int>(w.obstacles.size());
    for (const auto& ob : w.obstacles) env.obstacle_ids.push_back(ob.id);
    env.occupied_cells = grid_->occupied_count();
    h.up(3, {{"digest", env.digest}, {"occupied_cells", env.occupied_cells}});
    h.up(2, {{"obstacle_count", env.obstacle_count}});
    return environment_to_json(env);
  });
  return env;
}

AgentPositionReport Session::get_agent_position() {
  AgentPositionReport report;
  run("getAgentPosition", nlohmann::json::object(), [&](Hops& h) {
    require_active();
    require_sensed();
    h.down(2, {{"query", "pose"}});
    h.down(3, {{"query", "occupancy"}, {"z", pose_.position.z}});
    const GridMap& g = *grid_;
    report.pose = pose_;
    report.cell = g.locate(pose_.position.x, pose_.position.y);
    nlohmann::json rows = nlohmann::json::array();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const CellIndex n{report.cell.ix + dx, report.cell.iy + dy};
        std::uint8_t bit = 1;
        if (g.has_cell(n)) {
          const Rect r = g.cell_rect(n);
          bit = query_occupancy(
              g, {(r.x_lo + r.x_hi) / 2.0, (r.y_lo + r.y_hi) / 2.0, pose_.position.z});
        }
        report.neighborhood[dy + 1][dx + 1] = bit;
      }
    }
    const nlohmann::json full = position_report_to_json(report);
    h.up(3, {{"neighborhood", full.at("neighborhood")}});
    h.up(2, {{"pose", full.at("pose")}});
    return full;
  });
  return report;
}

Pose Session::fly(const VelocityCommand& cmd, Hops& h) {
  const WorldDescription& w = require_world();
  const Pose start = pose_;
  const Pose end = step(start, cmd, cmd.duration, config_.limits);
  if (!w.extent.contains(end.position)) {
    throw Error(ErrorCode::kOutOfBounds, "command would leave the world extent");
  }
  h.down(3, {{"segment", {vec_to_json(start.position), vec_to_json(end.position)}}});
  const double t0 = sim_time_;
  for (int i = 1;; ++i) {
    const double t = i * config_.sample_dt;
    if (t >= cmd.duration - 1e-12) break;
    trajectory_.push_back({t0 + t, step(start, cmd, t, config_.limits)});
  }
  trajectory_.push_back({t0 + cmd.duration, end});
  const CollisionReport report = collision_check(w.obstacles, start.position, end.position);
  for (const auto& id : report.collisions) {
    events_.push_back({t0, h.invocation(), id, true, start.position, end.position});
  }
  for (const auto& id : report.clearance_violations) {
    events_.push_back({t0, h.invocation(), id, false, start.position, end.position});
  }
  pose_ = end;
  sim_time_ = t0 + cmd.duration;
  h.up(3, {{"collisions", report.collisions},
           {"clearance_violations", report.clearance_violations}});
  h.up(2, {{"pose", pose_to_json(pose_)}});
  return pose_;
}

Pose Session::move_agent(const VelocityCommand& cmd) {
  run("moveAgent", command_to_json(cmd), [&](Hops& h) {
    require_active();
    check_command(cmd, config_.limits);
    h.down(2, {{"command", command_to_json(cmd)}});
    return nlohmann::json{{"pose", pose_to_json(fly(cmd, h))}};
  });
  return pose_;
}

Pose Session::execute_agent_maneuver(Vec3 v, double quantum) {
  const nlohmann::json args = {{"vx", v.x}, {"vy", v.y}, {"vz", v.z}, {"quantum", quantum}};
  run("executeAgentManeuver", args, [&](Hops& h) {
    require_active();
    if (!is_admissible_quantum(quantum)) {
      throw Error(ErrorCode::kInvalidQuantum, "maneuver quantum must be exactly 0.5 or 3 s");
    }
    const VelocityCommand cmd{v.x, v.y, v.z, quantum};
    check_command(cmd, config_.limits);
    h.down(2, {{"command", command_to_json(cmd)}});
    return nlohmann::json{{"pose", pose_to_json(fly(cmd, h))}};
  });
  return pose_;
}

ManeuverOutcome Session::avoid_obstacle(const std::string& obstacle_id, Strategy strategy,
                                        std::optional<double> height_bound, bool execute) {
  nlohmann::json args = {{"obstacle_id", obstacle_id}, {"strategy", strategy_name(strategy)}};
  if (height_bound) args["height_bound"] = *height_bound;
  if (!execute) args["execute"] = false;
  ManeuverOutcome out;
  run("avoidObstacle", args, [&](Hops&) {
    require_active();
    require_sensed();
    const Obstacle& ob = require_obstacle(obstacle_id);
    const MissionSpec& m = *active_;
    if (strategy == Strategy::kStraight) {
      throw Error(ErrorCode::kInvalidArguments, "avoidObstacle needs an avoidance strategy");
    }
    if ((m.constraint == StrategyConstraint::kAltitudeOnly && strategy != Strategy::kAltitude) ||
        (m.constraint == StrategyConstraint::kCircumnavigate &&
         strategy != Strategy::kCircumnavigate)) {
      throw Error(ErrorCode::kStrategyInfeasible,
                  "mission '" + m.id + "' only permits " +
                      std::string(constraint_name(m.constraint)) + " maneuvers");
    }
    const WorldDescription& w = require_world();
    const PlanContext ctx{w.extent, config_.limits, 0.0};
    const Vec3 from = pose_.position;
    switch (strategy) {
      case Strategy::kTurn:
        out.plan = plan_turn_bypass(from, m.goal, ob, std::max(m.margin, ob.clearance), ctx,
                                    w.obstacles);
        break;
      case Strategy::kAltitude: {
        const std::optional<double> bound = height_bound ? height_bound : m.height_bound;
        if (!bound) {
          throw Error(ErrorCode::kStrategyInfeasible,
                      "altitude bypass needs a declared height bound");
        }
        out.plan = plan_altitude_bypass(from, m.goal, *bound, m.margin,
                                        config_.limits.max_v_speed, ctx);
        break;
      }
      case Strategy::kCircumnavigate:
        out.plan = plan_circumnavigation(from, m.goal, ob, std::max(m.margin, ob.clearance),
                                         config_.arc_step, ctx, w.obstacles);
        break;
      case Strategy::kStraight:
        break;
    }
    if (execute) {
      for (const ManeuverCall& c : out.plan.maneuver_calls) {
        execute_agent_maneuver(c.velocity, c.quantum);
      }
      out.executed = true;
    }
    out.pose = pose_;
    return nlohmann::json{
        {"plan", plan_to_json(out.plan)}, {"executed", out.executed}, {"pose", pose_to_json(pose_)}};
  });
  return out;
}

Obstacle Session::get_obstacle_dimensions(const std::string& obstacle_id) {
  Obstacle out;
  run("getObstacleDimensions", {{"obstacle_id", obstacle_id}}, [&](Hops&) {
    require_active();
    out = require_obstacle(obstacle_id);
    return dimensions_to_json(out);
  });
  return out;
}

void Session::complete_mission() {
  require_active();
  active_ = nullptr;
}

nlohmann::json Session::invoke(std::string_view name, const nlohmann::json& args) {
  const ToolSchema* schema = find_schema(name);
  if (!schema) {
    throw Error(ErrorCode::kUnknownStream, "unknown stream '" + std::string(name) + "'");
  }
  if (auto problem = validate_args(*schema, args)) {
    throw Error(ErrorCode::kInvalidArguments, std::string(name) + ": " +
                                                  (problem->field.empty() ? "" : problem->field + ": ") +
                                                  problem->reason);
  }
  const nlohmann::json a = args.is_null() ? nlohmann::json::object() : args;
  auto num = [&](const char* key) { return a.at(key).get<double>(); };
  if (name == "startMission") {
    start_mission(a.at("mission_id").get<std::string>());
  } else if (name == "getMissionCoordinates") {
    get_mission_coordinates();
  } else if (name == "senseEnvironment") {
    sense_environment();
  } else if (name == "getAgentPosition") {
    get_agent_position();
  } else if (name == "moveAgent") {
    move_agent({num("vx"), num("vy"), num("vz"), num("duration")});
  } else if (name == "avoidObstacle") {
    std::optional<double> bound;
    if (a.contains("height_bound")) bound = num("height_bound");
    avoid_obstacle(a.at("obstacle_id").get<std::string>(),
                   parse_strategy(a.at("strategy").get<std::string>()), bound,
                   a.value("execute", true));
  } else if (name == "getObstacleDimensions") {
    get_obstacle_dimensions(a.at("obstacle_id").get<std::string>());
  } else {
    execute_agent_maneuver({num("vx"), num("vy"), num("vz")}, num("quantum"));
  }
  // The upstream layer-1 hop of the invocation just completed holds its result.
  return records_.back().result;
}

}  // namespace uavllm
