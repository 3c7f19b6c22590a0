#include <algorithm>
#include <cmath>

#include "uavllm/error.hpp"
#include "uavllm/streams.hpp"

namespace uavllm {

namespace {

ParamSpec number(std::string name, std::string description, std::string unit) {
  return {std::move(name), ParamType::kNumber, std::move(description), std::move(unit), true, {}};
}

std::vector<ToolSchema> make_schemas() {
  std::vector<ToolSchema> s;
  s.push_back({"startMission",
               "Open the mission session identified by mission_id and make the control-layer "
               "interaction streams available. Returns the names of the callable streams.",
               {{"mission_id", ParamType::kString, "Identifier of the mission to start.", "", true,
                 {}}}});
  s.push_back({"getMissionCoordinates",
               "Return the start and goal coordinates (x, y, z in meters) of the active mission.",
               {}});
  s.push_back({"senseEnvironment",
               "Load the pre-mapped environment of the active mission as a 2.5D heightmap grid. "
               "Returns extent, resolution, a digest of the grid, and the obstacle ids.",
               {}});
  s.push_back({"getAgentPosition",
               "Return the agent pose (position and yaw/roll/pitch), its grid cell, and the 3x3 "
               "occupancy neighborhood around it at the current altitude, where 1 marks an "
               "obstacle and 0 free space. Row 0 of the neighborhood is the row of lower y.",
               {}});
  s.push_back({"moveAgent",
               "Command the agent actuators with a velocity in x, y and z for a duration; the "
               "agent yaws toward its horizontal velocity and tilts accordingly. Returns the "
               "resulting pose.",
               {number("vx", "Velocity along x.", "m/s"), number("vy", "Velocity along y.", "m/s"),
                number("vz", "Velocity along z.", "m/s"),
                number("duration", "How long to apply the velocity.", "s")}});
  s.push_back({"avoidObstacle",
               "Plan an avoidance path around an obstacle from the current agent position toward "
               "the mission goal using the obstacle dimensions from the heightmap, and fly it as a "
               "series of executeAgentManeuver sub-calls. Strategy 'turn' detours horizontally, "
               "'altitude' climbs over using a declared height bound, 'circumnavigate' follows an "
               "arc outside the obstacle clearance boundary.",
               {{"obstacle_id", ParamType::kString, "Obstacle to avoid.", "", true, {}},
                {"strategy", ParamType::kString, "Avoidance maneuver.", "", true,
                 {"turn", "altitude", "circumnavigate"}},
                {"height_bound", ParamType::kNumber,
                 "Declared maximum obstacle height for the altitude strategy; defaults to the "
                 "mission's bound.",
                 "m", false, {}},
                {"execute", ParamType::kBoolean,
                 "Fly the plan immediately (default true); false only returns the plan.", "", false,
                 {}}}});
  s.push_back({"getObstacleDimensions",
               "Return the shape, dimensions and clearance of an obstacle from the environment "
               "description.",
               {{"obstacle_id", ParamType::kString, "Obstacle to describe.", "", true, {}}}});
  s.push_back({"executeAgentManeuver",
               "Maneuver sub-call: apply a velocity in x, y and z for exactly 0.5 or 3 seconds so "
               "the agent keeps moving in the planned direction. Returns the resulting pose.",
               {number("vx", "Velocity along x.", "m/s"), number("vy", "Velocity along y.", "m/s"),
                number("vz", "Velocity along z.", "m/s"),
                number("quantum", "Maneuver duration, 0.5 or 3.", "s")}});
  return s;
}

bool matches_type(const nlohmann::json& v, ParamType t) {
  switch (t) {
    case ParamType::kNumber: return v.is_number();
    case ParamType::kInteger: return v.is_number_integer();
    case ParamType::kString: return v.is_string();
    case ParamType::kBoolean: return v.is_boolean();
  }
  return false;
}

}  // namespace

std::string_view param_type_name(ParamType t) {
  switch (t) {
    case ParamType::kNumber: return "number";
    case ParamType::kInteger: return "integer";
    case ParamType::kString: return "string";
    case ParamType::kBoolean: return "boolean";
  }
  return "number";
}

ParamType parse_param_type(std::string_view name) {
  for (auto t : {ParamType::kNumber, ParamType::kInteger, ParamType::kString, ParamType::kBoolean}) {
    if (param_type_name(t) == name) return t;
  }
  throw Error(ErrorCode::kInvalidArguments, "unknown parameter type '" + std::string(name) + "'");
}

const ParamSpec* ToolSchema::find(std::string_view param) const {
  for (const auto& p : params) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

nlohmann::json schema_to_json(const ToolSchema& schema) {
  nlohmann::json props = nlohmann::json::object();
  nlohmann::json required = nlohmann::json::array();
  for (const auto& p : schema.params) {
    nlohmann::json prop = {{"type", param_type_name(p.type)}, {"description", p.description}};
    if (!p.unit.empty()) prop["x-unit"] = p.unit;
    if (!p.enum_values.empty()) prop["enum"] = p.enum_values;
    props[p.name] = prop;
    if (p.required) required.push_back(p.name);
  }
  // Property order is lost in JSON objects; keep it explicitly for round-trips.
  nlohmann::json order = nlohmann::json::array();
  for (const auto& p : schema.params) order.push_back(p.name);
  return {{"type", "function"},
          {"function",
           {{"name", schema.name},
            {"description", schema.description},
            {"parameters",
             {{"type", "object"},
              {"properties", props},
              {"required", required},
              {"additionalProperties", false},
              {"x-order", order}}}}}};
}

ToolSchema schema_from_json(const nlohmann::json& j) {
  try {
    const auto& fn = j.at("function");
    ToolSchema s;
    s.name = fn.at("name").get<std::string>();
    s.description = fn.value("description", "");
    const auto& params = fn.at("parameters");
    const auto required = params.value("required", std::vector<std::string>{});
    std::vector<std::string> order = params.value("x-order", std::vector<std::string>{});
    const auto& props = params.at("properties");
    if (order.empty()) {
      for (auto it = props.begin(); it != props.end(); ++it) order.push_back(it.key());
    }
    for (const auto& name : order) {
      const auto& prop = props.at(name);
      ParamSpec p;
      p.name = name;
      p.type = parse_param_type(prop.at("type").get<std::string>());
      p.description = prop.value("description", "");
      p.unit = prop.value("x-unit", "");
      p.required = std::find(required.begin(), required.end(), name) != required.end();
      p.enum_values = prop.value("enum", std::vector<std::string>{});
      s.params.push_back(std::move(p));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArguments, std::string("malformed tool schema: ") + e.what());
  }
}

const std::vector<ToolSchema>& stream_schemas() {
  static const std::vector<ToolSchema> schemas = make_schemas();
  return schemas;
}

const ToolSchema* find_schema(std::string_view name) {
  for (const auto& s : stream_schemas()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<std::string> stream_names() {
  std::vector<std::string> names;
  for (const auto& s : stream_schemas()) names.push_back(s.name);
  return names;
}

nlohmann::json export_schemas() {
  nlohmann::json tools = nlohmann::json::array();
  for (const auto& s : stream_schemas()) tools.push_back(schema_to_json(s));
  return {{"schema", "uav-tools/1"}, {"tools", tools}};
}

std::optional<ArgProblem> validate_args(const ToolSchema& schema, const nlohmann::json& args) {
  if (args.is_null() && std::none_of(schema.params.begin(), schema.params.end(),
                                     [](const ParamSpec& p) { return p.required; })) {
    return std::nullopt;
  }
  if (!args.is_object()) return ArgProblem{"", "arguments must be a JSON object"};
  for (auto it = args.begin(); it != args.end(); ++it) {
    if (!schema.find(it.key())) return ArgProblem{it.key(), "unknown parameter"};
  }
  for (const auto& p : schema.params) {
    if (!args.contains(p.name)) {
      if (p.required) return ArgProblem{p.name, "missing required parameter"};
      continue;
    }
    const auto& v = args.at(p.name);
    if (!matches_type(v, p.type)) {
      return ArgProblem{p.name, "expected " + std::string(param_type_name(p.type))};
    }
    if (p.type == ParamType::kNumber && !std::isfinite(v.get<double>())) {
      return ArgProblem{p.name, "must be finite"};
    }
    if (!p.enum_values.empty() &&
        std::find(p.enum_values.begin(), p.enum_values.end(), v.get<std::string>()) ==
            p.enum_values.end()) {
      return ArgProblem{p.name, "not one of the allowed values"};
    }
  }
  return std::nullopt;
}

}  // namespace uavllm
