#include "uavllm/mission_spec.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "uavllm/error.hpp"
#include "uavllm/world.hpp"

namespace uavllm {

namespace {

constexpr const char* kMissionSchema = "uav-mission/1";

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidMission, "invalid mission: " + what);
}

}  // namespace

std::string_view constraint_name(StrategyConstraint c) {
  switch (c) {
    case StrategyConstraint::kAny: return "any";
    case StrategyConstraint::kAltitudeOnly: return "altitude-only";
    case StrategyConstraint::kCircumnavigate: return "circumnavigate";
  }
  return "any";
}

StrategyConstraint parse_constraint(std::string_view name) {
  for (auto c : {StrategyConstraint::kAny, StrategyConstraint::kAltitudeOnly,
                 StrategyConstraint::kCircumnavigate}) {
    if (constraint_name(c) == name) return c;
  }
  invalid("unknown strategy constraint '" + std::string(name) + "'");
}

void validate_mission(const MissionSpec& m) {
  if (m.id.empty()) invalid("empty id");
  if (m.start == m.goal) invalid("start and goal coincide");
  if (m.call_limit < 1) invalid("call_limit must be >= 1");
  if (!(m.goal_tolerance > 0.0)) invalid("goal_tolerance must be positive");
  if (!(m.timeout > 0.0)) invalid("timeout must be positive");
  if (m.margin < 0.0) invalid("margin must be non-negative");
  const WorldDescription world = world_from_json(m.world_doc);
  validate_world(world.extent, world.resolution, world.obstacles);
  if (!world.extent.contains(m.start)) invalid("start lies outside the world extent");
  if (!world.extent.contains(m.goal)) invalid("goal lies outside the world extent");
}

MissionSpec mission_from_json(const nlohmann::json& doc, const std::string& base_dir) {
  if (!doc.is_object()) invalid("top level must be an object");
  if (doc.contains("schema") && doc.at("schema") != kMissionSchema) invalid("unsupported schema");
  MissionSpec m;
  try {
    m.id = doc.at("id").get<std::string>();
    m.description = doc.value("description", "");
    m.start = vec_from_json(doc.at("start"));
    m.goal = vec_from_json(doc.at("goal"));
    m.constraint = parse_constraint(doc.value("strategy_constraint", "any"));
    if (doc.contains("height_bound") && !doc.at("height_bound").is_null()) {
      m.height_bound = doc.at("height_bound").get<double>();
    }
    m.margin = doc.value("margin", 0.5);
    m.prompt_constraints = doc.value("prompt_constraints", std::vector<std::string>{});
    m.user_prompt = doc.value("user_prompt", "");
    m.call_limit = doc.value("call_limit", 10);
    m.goal_tolerance = doc.value("goal_tolerance", 0.5);
    m.timeout = doc.value("timeout", 600.0);
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }
  if (!doc.contains("world")) invalid("missing 'world'");
  const auto& world = doc.at("world");
  if (world.is_string()) {
    m.world_ref = world.get<std::string>();
    std::filesystem::path p(m.world_ref);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::kWorldFileInvalid, "cannot open world file " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    m.world_doc = nlohmann::json::parse(buf.str(), nullptr, false);
    if (m.world_doc.is_discarded()) {
      throw Error(ErrorCode::kWorldFileInvalid, "world file " + p.string() + " is not JSON");
    }
  } else {
    m.world_ref = doc.value("world_ref", "inline");
    m.world_doc = world;
  }
  validate_mission(m);
  return m;
}

nlohmann::json mission_to_json(const MissionSpec& m) {
  nlohmann::json j;
  j["schema"] = kMissionSchema;
  j["id"] = m.id;
  j["description"] = m.description;
  j["world"] = m.world_doc;
  j["world_ref"] = m.world_ref;
  j["start"] = vec_to_json(m.start);
  j["goal"] = vec_to_json(m.goal);
  j["strategy_constraint"] = constraint_name(m.constraint);
  j["height_bound"] = m.height_bound ? nlohmann::json(*m.height_bound) : nlohmann::json();
  j["margin"] = m.margin;
  j["prompt_constraints"] = m.prompt_constraints;
  j["user_prompt"] = m.user_prompt;
  j["call_limit"] = m.call_limit;
  j["goal_tolerance"] = m.goal_tolerance;
  j["timeout"] = m.timeout;
  return j;
}

MissionSpec load_mission_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidMission, "cannot open mission file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const nlohmann::json doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kInvalidMission, "mission file " + path + " is not JSON");
  return mission_from_json(doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace uavllm
