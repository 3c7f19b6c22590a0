#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/llm.hpp"
#include "uavllm/mission.hpp"

namespace uavllm {

inline constexpr const char* kGatewaySchema = "uav-gateway/1";
inline constexpr const char* kTelemetrySchema = "uav-telemetry/1";

struct SessionHandle {
  std::string session_id;
  std::string mission_id;
  MissionMode mode = MissionMode::kDirect;
  LlmState state = LlmState::kIdle;
};

nlohmann::json handle_to_json(const SessionHandle& handle);

/// Builds the model provider for one LLM-mode session.
using ProviderFactory = std::function<std::unique_ptr<Provider>(const MissionSpec&)>;

struct GatewayOptions {
  std::vector<MissionSpec> missions;
  ProviderFactory make_provider;  // LLM mode is refused when unset
  LlmOptions llm;
  SessionConfig config;
};

namespace detail {
struct GatewaySession;
}

/// Read side of one session's telemetry. The first frame is a snapshot of
/// the state at subscription time (including the trace so far); every later
/// frame carries the next sequence number. The stream ends with a
/// "finished" frame once the session finishes.
class TelemetrySubscription {
 public:
  explicit TelemetrySubscription(std::shared_ptr<detail::GatewaySession> session);
  ~TelemetrySubscription();
  TelemetrySubscription(TelemetrySubscription&&) = default;
  TelemetrySubscription& operator=(TelemetrySubscription&&) = delete;
  TelemetrySubscription(const TelemetrySubscription&) = delete;
  TelemetrySubscription& operator=(const TelemetrySubscription&) = delete;

  /// Next frame, or nullopt when none arrived within `timeout` or the stream
  /// has ended.
  std::optional<nlohmann::json> next(std::chrono::milliseconds timeout);
  /// True once the finished frame has been delivered or the gateway shut down.
  bool ended() const;

 private:
  std::shared_ptr<detail::GatewaySession> session_;
  std::optional<nlohmann::json> snapshot_;
  std::size_t cursor_ = 0;
  bool ended_ = false;
};

/// Service core behind the HTTP surface. Each session owns one executor
/// thread; every mutation of a session runs there in arrival order, and
/// callers only see the state mirrored after each step.
class Gateway {
 public:
  explicit Gateway(GatewayOptions options);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  nlohmann::json list_missions() const;

  /// Throws kMissionNotFound, kInvalidArguments (LLM mode without a provider)
  /// and kConflict while another unfinished session uses the same world.
  SessionHandle create_session(const std::string& mission_id, MissionMode mode);

  /// Queues the prompt on the session's executor. Direct sessions ignore the
  /// text and fly the mission once. Throws kSessionNotFound, kBusy while a
  /// run is in progress, kBudgetExceeded once the call budget is spent and
  /// kConflict for a finished session.
  void submit_prompt(const std::string& session_id, const std::string& text);

  SessionHandle handle(const std::string& session_id) const;
  std::vector<SessionHandle> sessions() const;
  /// Handle plus mission outcome, budget, the latest pose and the number of
  /// attached telemetry subscribers.
  nlohmann::json status(const std::string& session_id) const;
  /// Log as of the last settled point. Throws kBusy mid-run.
  MissionLog log(const std::string& session_id) const;

  TelemetrySubscription subscribe(const std::string& session_id) const;

  /// Blocks until the session is neither queued nor running. Returns false on
  /// timeout.
  bool wait_settled(const std::string& session_id, std::chrono::milliseconds timeout) const;

  /// Ends every telemetry stream and joins the executors.
  void shutdown();

 private:
  std::shared_ptr<detail::GatewaySession> find(const std::string& session_id) const;

  GatewayOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<detail::GatewaySession>> sessions_;
  std::uint64_t next_id_ = 1;
  bool shut_down_ = false;
};

/// HTTP transport over a Gateway. Commands are JSON over plain HTTP;
/// telemetry is a chunked NDJSON response that stays open until the session
/// finishes.
class GatewayServer {
 public:
  explicit GatewayServer(Gateway& gateway);
  ~GatewayServer();

  /// Binds without serving. Port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for a gateway error code.
int http_status_for(ErrorCode code);

}  // namespace uavllm
