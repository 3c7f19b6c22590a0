#pragma once

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/agent.hpp"
#include "uavllm/error.hpp"
#include "uavllm/mission_spec.hpp"
#include "uavllm/planner.hpp"
#include "uavllm/world.hpp"

namespace uavllm {

// ---------------------------------------------------------------------------
// Tool schemas

enum class ParamType { kNumber, kInteger, kString, kBoolean };

std::string_view param_type_name(ParamType t);
ParamType parse_param_type(std::string_view name);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::kNumber;
  std::string description;
  std::string unit;  // semantic unit, e.g. "m/s"; empty when dimensionless
  bool required = true;
  std::vector<std::string> enum_values;  // strings only
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  const ParamSpec* find(std::string_view param) const;
  friend bool operator==(const ToolSchema&, const ToolSchema&) = default;
};

/// Function-calling tool document: {"type":"function","function":{name,
/// description, parameters: JSON-Schema object}}. Units travel in "x-unit".
nlohmann::json schema_to_json(const ToolSchema& schema);
ToolSchema schema_from_json(const nlohmann::json& j);

/// The eight interaction streams in registry order.
const std::vector<ToolSchema>& stream_schemas();
const ToolSchema* find_schema(std::string_view name);
std::vector<std::string> stream_names();
/// {"schema":"uav-tools/1","tools":[...]}
nlohmann::json export_schemas();

struct ArgProblem {
  std::string field;   // offending parameter, empty for whole-object problems
  std::string reason;
};

/// Checks arguments against the schema: required fields present, types
/// correct, enums respected, no unknown fields.
std::optional<ArgProblem> validate_args(const ToolSchema& schema, const nlohmann::json& args);

// ---------------------------------------------------------------------------
// Stream log

/// Framework layer crossed by one hop: 1 = model<->control,
/// 2 = control<->simulation, 3 = simulation<->environment.
enum class Sense { kDownstream, kUpstream };

struct StreamDirection {
  Sense sense = Sense::kDownstream;
  int layer = 1;
  friend bool operator==(StreamDirection, StreamDirection) = default;
};

/// One hop of one stream invocation. An invocation of depth d logs
/// downstream hops 1..d then upstream hops d..1; maneuver sub-calls of
/// avoidObstacle nest between its downstream and upstream layer-1 hops.
struct StreamCall {
  std::uint64_t call_id = 0;
  std::uint64_t invocation = 0;
  std::optional<std::uint64_t> parent;
  std::uint64_t turn = 0;
  std::string name;
  nlohmann::json args;
  nlohmann::json result;
  StreamDirection direction;
  double sim_time = 0.0;
  friend bool operator==(const StreamCall&, const StreamCall&) = default;
};

nlohmann::json call_to_json(const StreamCall& call);
StreamCall call_from_json(const nlohmann::json& j);

struct OrderingReport {
  bool ok = true;
  std::optional<std::uint64_t> violation_call_id;
  std::string message;
};

/// Checks call_id monotonicity, nondecreasing sim_time and turn, per-invocation
/// hop order (downstream 1,2,...,d then upstream d,...,1) and proper nesting.
OrderingReport validate_ordering(const std::vector<StreamCall>& log);

// ---------------------------------------------------------------------------
// Session

struct SessionConfig {
  AgentLimits limits;
  double sample_dt = 0.5;                      // trajectory sampling step
  double arc_step = std::numbers::pi / 16.0;  // circumnavigation arc step
};

struct TrajectorySample {
  double time = 0.0;
  Pose pose;
  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct CollisionEvent {
  double sim_time = 0.0;
  std::uint64_t invocation = 0;
  std::string obstacle_id;
  bool solid = true;  // false: clearance boundary only
  Vec3 from;
  Vec3 to;
  friend bool operator==(const CollisionEvent&, const CollisionEvent&) = default;
};

struct EnvironmentSummary {
  WorldExtent extent;
  double resolution = 1.0;
  std::string digest;
  int obstacle_count = 0;
  std::vector<std::string> obstacle_ids;
  int occupied_cells = 0;
};

struct AgentPositionReport {
  Pose pose;
  CellIndex cell;
  /// neighborhood[dy + 1][dx + 1]; row 0 is the row below (lower y). Cells
  /// outside the extent read 1.
  std::uint8_t neighborhood[3][3] = {};
};

struct ManeuverOutcome {
  ManeuverPlan plan;
  bool executed = false;
  Pose pose;
};

/// One mission session over the eight interaction streams. Single-writer:
/// every call runs to completion on the caller's thread before the next.
class Session {
 public:
  using Observer = std::function<void(const StreamCall&)>;

  explicit Session(std::vector<MissionSpec> missions, SessionConfig config = {});

  /// Schema-validated dispatch by stream name. Unknown names raise
  /// kUnknownStream and bad arguments kInvalidArguments; neither is logged.
  /// Stream failures are logged and rethrown.
  nlohmann::json invoke(std::string_view name, const nlohmann::json& args);

  std::vector<std::string> start_mission(const std::string& mission_id);
  std::pair<Vec3, Vec3> get_mission_coordinates();
  EnvironmentSummary sense_environment();
  AgentPositionReport get_agent_position();
  Pose move_agent(const VelocityCommand& cmd);
  ManeuverOutcome avoid_obstacle(const std::string& obstacle_id, Strategy strategy,
                                 std::optional<double> height_bound = std::nullopt,
                                 bool execute = true);
  Obstacle get_obstacle_dimensions(const std::string& obstacle_id);
  Pose execute_agent_maneuver(Vec3 velocity, double quantum);

  /// Closes the active mission so another may start.
  void complete_mission();
  /// Marks the start of a new burst (one model turn or one direct step).
  void next_turn() { ++turn_; }
  void set_observer(Observer observer) { observer_ = std::move(observer); }

  bool active() const { return active_ != nullptr; }
  const MissionSpec* mission() const { return active_; }
  const std::vector<MissionSpec>& missions() const { return missions_; }
  const MissionSpec* find_mission(std::string_view id) const;
  const Pose& pose() const { return pose_; }
  double sim_time() const { return sim_time_; }
  std::uint64_t turn() const { return turn_; }
  bool sensed() const { return grid_.has_value(); }
  const GridMap* grid() const { return grid_ ? &*grid_ : nullptr; }
  const WorldDescription* world() const { return world_ ? &*world_ : nullptr; }
  const std::vector<StreamCall>& records() const { return records_; }
  const std::vector<TrajectorySample>& trajectory() const { return trajectory_; }
  const std::vector<CollisionEvent>& collision_events() const { return events_; }
  const SessionConfig& config() const { return config_; }

 private:
  class Hops;
  friend class Hops;

  nlohmann::json run(std::string_view name, const nlohmann::json& args,
                     const std::function<nlohmann::json(Hops&)>& body);
  void emit(StreamCall call);
  void require_active() const;
  void require_sensed() const;
  const WorldDescription& require_world() const;
  const Obstacle& require_obstacle(const std::string& id) const;
  Pose fly(const VelocityCommand& cmd, Hops& hops);

  std::vector<MissionSpec> missions_;
  SessionConfig config_;
  const MissionSpec* active_ = nullptr;
  std::optional<WorldDescription> world_;
  std::optional<GridMap> grid_;
  std::string world_error_;
  Pose pose_;
  double sim_time_ = 0.0;
  std::uint64_t turn_ = 0;
  std::uint64_t next_call_id_ = 1;
  std::uint64_t next_invocation_ = 1;
  std::vector<std::uint64_t> open_;  // invocation nesting stack
  std::vector<StreamCall> records_;
  std::vector<TrajectorySample> trajectory_;
  std::vector<CollisionEvent> events_;
  Observer observer_;
};

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json environment_to_json(const EnvironmentSummary& env);
nlohmann::json position_report_to_json(const AgentPositionReport& report);
nlohmann::json dimensions_to_json(const Obstacle& obstacle);
nlohmann::json error_to_json(const Error& error);

}  // namespace uavllm
