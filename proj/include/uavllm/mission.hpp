#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/llm.hpp"
#include "uavllm/mission_spec.hpp"
#include "uavllm/streams.hpp"

namespace uavllm {

enum class MissionMode { kDirect, kLlm };
enum class MissionStatus { kReached, kHalted, kBudgetExhausted };

std::string_view mode_name(MissionMode mode);
MissionMode parse_mode(std::string_view name);
std::string_view status_name(MissionStatus status);
MissionStatus parse_status(std::string_view name);

inline constexpr const char* kLogSchema = "uavlog/1";
inline constexpr const char* kCompletionMarker = "MISSION COMPLETE";

/// Complete, replayable record of one mission run. Contains no wall-clock
/// data, so identical runs serialize to identical bytes.
struct MissionLog {
  MissionSpec mission;
  MissionMode mode = MissionMode::kDirect;
  SessionConfig config;
  std::string provider;                // llm mode
  std::optional<ModelConfig> model;    // llm mode
  std::vector<StreamCall> records;
  std::vector<TrajectorySample> trajectory;
  std::vector<CollisionEvent> events;
  std::vector<ChatTurn> transcript;    // llm mode
  ApiBudget budget;                    // price table is not serialized
  MissionStatus status = MissionStatus::kHalted;
  std::string halt_reason;
  Pose final_pose;
  double sim_time = 0.0;
};

/// Newline-delimited JSON: a header line, then call, sample, event and turn
/// lines, then a footer line. See docs/log-format.md.
std::string log_to_ndjson(const MissionLog& log);
MissionLog log_from_ndjson(const std::string& text);
void write_log_file(const MissionLog& log, const std::string& path);
MissionLog read_log_file(const std::string& path);

/// Sees every record of a direct run together with the session that logged it.
using DirectObserver = std::function<void(const Session&, const StreamCall&)>;

/// Direct control: the canonical stream sequence driven by the planners.
/// Throws kWorldFileInvalid for an unusable world and kPlanningFailed when no
/// plan gets the agent to the goal.
MissionLog run_direct(const MissionSpec& mission, const SessionConfig& config = {},
                      const DirectObserver& observer = {});

enum class LlmState { kIdle, kAwaitingLlm, kExecuting, kFinished };
std::string_view llm_state_name(LlmState state);

struct LlmOptions {
  ModelConfig model;
  PriceTable prices;
  std::string completion_marker = kCompletionMarker;
  /// Replaces the mission's call_limit when set.
  std::optional<int> call_limit;
};

/// Model-driven mission loop, shared by the CLI and the gateway. Each user
/// prompt runs the loop until the model yields: completion marker, a turn
/// without tool calls, budget exhaustion or a halt.
class LlmMission {
 public:
  using RecordObserver = std::function<void(const StreamCall&)>;
  using StateObserver = std::function<void(LlmState)>;

  LlmMission(MissionSpec mission, Provider& provider, LlmOptions options,
             SessionConfig config = {});

  /// Appends a user turn and runs the loop. Throws kBudgetExceeded when the
  /// budget is already spent.
  void submit_prompt(const std::string& text);

  LlmState state() const { return state_; }
  MissionStatus status() const { return status_; }
  const std::string& halt_reason() const { return halt_reason_; }
  const ApiBudget& budget() const { return budget_; }
  const Session& session() const { return session_; }
  const std::vector<ChatTurn>& transcript() const { return transcript_; }
  const MissionSpec& mission() const { return mission_; }
  MissionLog log() const;

  void set_record_observer(RecordObserver observer);
  void set_state_observer(StateObserver observer) { on_state_ = std::move(observer); }

 private:
  void run_loop();
  void set_state(LlmState s);
  void finish(MissionStatus status, std::string reason);
  bool at_goal() const;

  MissionSpec mission_;
  Provider& provider_;
  LlmOptions options_;
  Session session_;
  ApiBudget budget_;
  std::vector<ChatTurn> transcript_;
  LlmState state_ = LlmState::kIdle;
  MissionStatus status_ = MissionStatus::kHalted;
  std::string halt_reason_ = "not started";
  StateObserver on_state_;
};

/// One mission under model control, started with the mission's user prompt.
MissionLog run_llm(const MissionSpec& mission, Provider& provider, const LlmOptions& options,
                   const SessionConfig& config = {});

struct MissionMetrics {
  bool reached = false;
  double path_length = 0.0;
  int net_collisions = 0;          // sampled segments intersecting a solid
  int clearance_violations = 0;    // sampled segments entering a clearance shell only
  std::optional<double> min_sphere_clearance;  // min distance to any sphere centre
  int calls_used = 0;
  double sim_duration = 0.0;
};

nlohmann::json metrics_to_json(const MissionMetrics& m);

/// Metrics from the log alone: collision_check on every consecutive sample
/// pair, distance scan over the samples. Throws kMalformedLog.
MissionMetrics evaluate(const MissionLog& log);

/// Re-executes the logged top-level stream calls against a fresh session
/// (never a provider) and returns the rebuilt log. Throws kReplayDivergence
/// when the log is misordered or the re-execution differs.
MissionLog replay(const MissionLog& log);

}  // namespace uavllm
