#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uavllm {

enum class ErrorCode {
  // worldmodel
  kInvalidWorld,
  kNonDivisibleExtent,
  kObstacleOutOfBounds,
  kCellNotFound,
  kOutOfBounds,
  kWorldFileInvalid,
  // agent
  kLimitExceeded,
  // streams
  kMissionNotFound,
  kMissionAlreadyActive,
  kNoActiveMission,
  kEnvironmentNotSensed,
  kObstacleNotFound,
  kStrategyInfeasible,
  kStrategyUnnecessary,
  kInvalidQuantum,
  kUnknownStream,
  kInvalidArguments,
  // planner
  kBoundNotAboveStart,
  kCeilingExceeded,
  kPlanningFailed,
  // llm-bridge
  kBudgetExceeded,
  kProviderUnavailable,
  kMalformedToolCall,
  kUnknownModel,
  // mission
  kInvalidMission,
  kMalformedLog,
  kReplayDivergence,
  // gateway
  kSessionNotFound,
  kConflict,
  kBusy,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure surfaced by the library carries one of the codes above so
/// that stream results and HTTP responses can report it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace uavllm
