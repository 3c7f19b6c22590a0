#include "uavllm/error.hpp"

namespace uavllm {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidWorld: return "InvalidWorld";
    case ErrorCode::kNonDivisibleExtent: return "NonDivisibleExtent";
    case ErrorCode::kObstacleOutOfBounds: return "ObstacleOutOfBounds";
    case ErrorCode::kCellNotFound: return "CellNotFound";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kWorldFileInvalid: return "WorldFileInvalid";
    case ErrorCode::kLimitExceeded: return "LimitExceeded";
    case ErrorCode::kMissionNotFound: return "MissionNotFound";
    case ErrorCode::kMissionAlreadyActive: return "MissionAlreadyActive";
    case ErrorCode::kNoActiveMission: return "NoActiveMission";
    case ErrorCode::kEnvironmentNotSensed: return "EnvironmentNotSensed";
    case ErrorCode::kObstacleNotFound: return "ObstacleNotFound";
    case ErrorCode::kStrategyInfeasible: return "StrategyInfeasible";
    case ErrorCode::kStrategyUnnecessary: return "StrategyUnnecessary";
    case ErrorCode::kInvalidQuantum: return "InvalidQuantum";
    case ErrorCode::kUnknownStream: return "UnknownStream";
    case ErrorCode::kInvalidArguments: return "InvalidArguments";
    case ErrorCode::kBoundNotAboveStart: return "BoundNotAboveStart";
    case ErrorCode::kCeilingExceeded: return "CeilingExceeded";
    case ErrorCode::kPlanningFailed: return "PlanningFailed";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kMalformedToolCall: return "MalformedToolCall";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kInvalidMission: return "InvalidMission";
    case ErrorCode::kMalformedLog: return "MalformedLog";
    case ErrorCode::kReplayDivergence: return "ReplayDivergence";
    case ErrorCode::kSessionNotFound: return "SessionNotFound";
    case ErrorCode::kConflict: return "Conflict";
    case ErrorCode::kBusy: return "Busy";
  }
  return "Unknown";
}

}  // namespace uavllm
