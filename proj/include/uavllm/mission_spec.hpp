#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/geometry.hpp"

namespace uavllm {

enum class StrategyConstraint { kAny, kAltitudeOnly, kCircumnavigate };

std::string_view constraint_name(StrategyConstraint c);
StrategyConstraint parse_constraint(std::string_view name);

/// Declarative mission: endpoints, the world it runs in, and what the operator
/// tells the model.
struct MissionSpec {
  std::string id;
  std::string description;
  /// World reference as written in the mission file.
  std::string world_ref;
  /// Resolved world document. Kept unparsed so a corrupt world surfaces as
  /// WorldFileInvalid from senseEnvironment.
  nlohmann::json world_doc;
  Vec3 start;
  Vec3 goal;
  StrategyConstraint constraint = StrategyConstraint::kAny;
  /// Height bound the operator declares for altitude bypasses.
  std::optional<double> height_bound;
  double margin = 0.5;
  std::vector<std::string> prompt_constraints;
  std::string user_prompt;
  int call_limit = 10;
  double goal_tolerance = 0.5;
  double timeout = 600.0;  // simulated seconds
};

/// Parses a mission document. `base_dir` resolves a relative world path; the
/// world is loaded and start/goal are checked against its extent.
MissionSpec mission_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");
nlohmann::json mission_to_json(const MissionSpec& mission);
MissionSpec load_mission_file(const std::string& path);
/// Checks the mission invariants; throws kInvalidMission / kWorldFileInvalid.
void validate_mission(const MissionSpec& mission);

}  // namespace uavllm
