#include <condition_variable>
#include <deque>
#include <thread>

#include "uavllm/error.hpp"
#include "uavllm/gateway.hpp"

namespace uavllm {

namespace detail {

struct GatewaySession {
  SessionHandle handle;
  MissionSpec mission;
  SessionConfig config;
  std::unique_ptr<Provider> provider;
  std::unique_ptr<LlmMission> llm;  // touched only by the executor after creation

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  std::vector<nlohmann::json> frames;  // frame i carries seq i + 1
  nlohmann::json finished_frame;
  bool finished = false;
  bool closed = false;
  bool busy = false;
  int subscribers = 0;

  // Mirror of the executor-owned state, refreshed on every frame.
  Pose pose;
  double sim_time = 0.0;
  int calls_used = 0;
  int call_limit = 0;
  double accrued_cost = 0.0;
  int collisions = 0;
  std::vector<TrajectorySample> trace;
  nlohmann::json last_call;
  MissionStatus status = MissionStatus::kHalted;
  std::string halt_reason = "not started";
  MissionLog settled_log;

  std::deque<std::function<void()>> tasks;
  bool stopping = false;
  std::thread worker;
};

}  // namespace detail

namespace {

using detail::GatewaySession;

nlohmann::json samples_json(const std::vector<TrajectorySample>& v, std::size_t from) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = from; i < v.size(); ++i) {
    out.push_back({{"time", v[i].time}, {"pose", pose_to_json(v[i].pose)}});
  }
  return out;
}

/// Frame from the mirrored state. Caller holds g.mu.
nlohmann::json make_frame(const GatewaySession& g, std::uint64_t seq, const char* kind,
                          nlohmann::json samples) {
  return {{"schema", kTelemetrySchema},
          {"session_id", g.handle.session_id},
          {"seq", seq},
          {"kind", kind},
          {"state", llm_state_name(g.handle.state)},
          {"sim_time", g.sim_time},
          {"pose", pose_to_json(g.pose)},
          {"last_call", g.last_call},
          {"calls_used", g.calls_used},
          {"call_limit", g.call_limit},
          {"accrued_cost", g.accrued_cost},
          {"collisions", g.collisions},
          {"samples", std::move(samples)}};
}

int solid_collisions(const std::vector<CollisionEvent>& events) {
  int n = 0;
  for (const auto& e : events) n += e.solid ? 1 : 0;
  return n;
}

/// Refreshes the mirror from the live session and appends one frame.
/// Runs on the executor thread.
void publish(GatewaySession& g, const char* kind, const Session& s, const ApiBudget* budget,
             const StreamCall* call) {
  std::lock_guard lock(g.mu);
  const std::size_t seen = g.trace.size();
  const auto& traj = s.trajectory();
  for (std::size_t i = seen; i < traj.size(); ++i) g.trace.push_back(traj[i]);
  if (s.active() || !traj.empty()) {
    g.pose = s.pose();
    g.sim_time = s.sim_time();
  }
  g.collisions = solid_collisions(s.collision_events());
  if (budget) {
    g.calls_used = budget->calls_used;
    g.accrued_cost = budget->accrued_cost;
  }
  if (call) g.last_call = call_to_json(*call);
  g.frames.push_back(make_frame(g, g.frames.size() + 1, kind, samples_json(g.trace, seen)));
  g.cv.notify_all();
}

/// Records the outcome of a finished run step. Runs on the executor thread.
void settle(GatewaySession& g, MissionLog log, LlmState state) {
  std::lock_guard lock(g.mu);
  g.status = log.status;
  g.halt_reason = log.halt_reason;
  g.calls_used = log.budget.calls_used;
  g.accrued_cost = log.budget.accrued_cost;
  g.settled_log = std::move(log);
  g.handle.state = state;
  g.busy = false;
  if (state == LlmState::kFinished) {
    g.finished = true;
    g.finished_frame = make_frame(g, g.frames.size() + 1, "finished", nlohmann::json::array());
    g.finished_frame["status"] = status_name(g.status);
    g.finished_frame["halt_reason"] = g.halt_reason;
  }
  g.cv.notify_all();
}

void executor_loop(GatewaySession& g) {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock lock(g.mu);
      g.cv.wait(lock, [&] { return g.stopping || !g.tasks.empty(); });
      if (g.tasks.empty()) return;
      task = std::move(g.tasks.front());
      g.tasks.pop_front();
    }
    task();
  }
}

void run_direct_task(GatewaySession& g) {
  {
    std::lock_guard lock(g.mu);
    g.handle.state = LlmState::kExecuting;
  }
  Session idle({g.mission}, g.config);
  publish(g, "state", idle, nullptr, nullptr);
  MissionLog log = g.settled_log;
  try {
    log = run_direct(g.mission, g.config, [&](const Session& s, const StreamCall& c) {
      if (c.direction.layer == 1) publish(g, "call", s, nullptr, &c);
    });
  } catch (const Error& e) {
    log.status = MissionStatus::kHalted;
    log.halt_reason = e.what();
  }
  {
    std::lock_guard lock(g.mu);
    g.handle.state = LlmState::kFinished;
    g.frames.push_back(make_frame(g, g.frames.size() + 1, "state", nlohmann::json::array()));
  }
  settle(g, std::move(log), LlmState::kFinished);
}

void run_llm_task(GatewaySession& g, const std::string& text) {
  LlmMission& m = *g.llm;
  try {
    m.submit_prompt(text);
  } catch (const Error& e) {
    // Preconditions were checked at submission; anything here is a halt.
    std::lock_guard lock(g.mu);
    g.halt_reason = e.what();
  }
  settle(g, m.log(), m.state());
}

std::string world_key(const MissionSpec& m) {
  return m.world_ref == "inline" ? "inline:" + m.id : m.world_ref;
}

}  // namespace

nlohmann::json handle_to_json(const SessionHandle& h) {
  return {{"schema", kGatewaySchema},
          {"session_id", h.session_id},
          {"mission_id", h.mission_id},
          {"mode", mode_name(h.mode)},
          {"state", llm_state_name(h.state)}};
}

// ---------------------------------------------------------------------------
// Telemetry

TelemetrySubscription::TelemetrySubscription(std::shared_ptr<detail::GatewaySession> session)
    : session_(std::move(session)) {
  std::lock_guard lock(session_->mu);
  ++session_->subscribers;
  cursor_ = session_->frames.size();
  snapshot_ = make_frame(*session_, cursor_, "snapshot", samples_json(session_->trace, 0));
  (*snapshot_)["mission_id"] = session_->handle.mission_id;
  (*snapshot_)["mode"] = mode_name(session_->handle.mode);
}

TelemetrySubscription::~TelemetrySubscription() {
  if (!session_) return;
  std::lock_guard lock(session_->mu);
  --session_->subscribers;
}

std::optional<nlohmann::json> TelemetrySubscription::next(std::chrono::milliseconds timeout) {
  if (ended_) return std::nullopt;
  if (snapshot_) {
    auto out = std::move(snapshot_);
    snapshot_.reset();
    return out;
  }
  GatewaySession& g = *session_;
  std::unique_lock lock(g.mu);
  g.cv.wait_for(lock, timeout,
                [&] { return cursor_ < g.frames.size() || g.finished || g.closed; });
  if (cursor_ < g.frames.size()) return g.frames[cursor_++];
  if (g.finished) {
    ended_ = true;
    return g.finished_frame;
  }
  if (g.closed) ended_ = true;
  return std::nullopt;
}

bool TelemetrySubscription::ended() const { return ended_; }

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayOptions options) : options_(std::move(options)) {}

Gateway::~Gateway() { shutdown(); }

nlohmann::json Gateway::list_missions() const {
  nlohmann::json out = nlohmann::json::array();
  for (const MissionSpec& m : options_.missions) {
    out.push_back({{"id", m.id},
                   {"description", m.description},
                   {"world_ref", m.world_ref},
                   {"constraint", constraint_name(m.constraint)},
                   {"start", vec_to_json(m.start)},
                   {"goal", vec_to_json(m.goal)},
                   {"call_limit", m.call_limit}});
  }
  return {{"schema", kGatewaySchema}, {"missions", out}};
}

SessionHandle Gateway::create_session(const std::string& mission_id, MissionMode mode) {
  const MissionSpec* target = nullptr;
  for (const MissionSpec& m : options_.missions) {
    if (m.id == mission_id) target = &m;
  }
  if (!target) throw Error(ErrorCode::kMissionNotFound, "no mission with id '" + mission_id + "'");
  if (mode == MissionMode::kLlm && !options_.make_provider) {
    throw Error(ErrorCode::kInvalidArguments, "this gateway has no model provider configured");
  }

  std::lock_guard lock(mu_);
  if (shut_down_) throw Error(ErrorCode::kConflict, "gateway is shutting down");
  for (const auto& [id, other] : sessions_) {
    std::lock_guard other_lock(other->mu);
    if (!other->finished && world_key(other->mission) == world_key(*target)) {
      throw Error(ErrorCode::kConflict, "session " + id + " is still using world '" +
                                            target->world_ref + "'");
    }
  }

  auto g = std::make_shared<GatewaySession>();
  g->handle = {"s" + std::to_string(next_id_), target->id, mode, LlmState::kIdle};
  g->mission = *target;
  g->config = options_.config;
  g->pose.position = target->start;
  g->call_limit = options_.llm.call_limit.value_or(target->call_limit);
  if (mode == MissionMode::kLlm) {
    g->provider = options_.make_provider(*target);
    g->llm = std::make_unique<LlmMission>(*target, *g->provider, options_.llm, options_.config);
    GatewaySession* raw = g.get();
    g->llm->set_record_observer([raw](const StreamCall& c) {
      if (c.direction.layer == 1) publish(*raw, "call", raw->llm->session(), &raw->llm->budget(), &c);
    });
    g->llm->set_state_observer([raw](LlmState s) {
      // The finished transition is published once the log has settled.
      if (s == LlmState::kFinished) return;
      {
        std::lock_guard l(raw->mu);
        raw->handle.state = s;
      }
      publish(*raw, "state", raw->llm->session(), &raw->llm->budget(), nullptr);
    });
    g->settled_log = g->llm->log();
  } else {
    g->settled_log.mission = *target;
    g->settled_log.mode = MissionMode::kDirect;
    g->settled_log.config = options_.config;
    g->settled_log.budget.call_limit = target->call_limit;
    g->settled_log.final_pose = g->pose;
    g->settled_log.halt_reason = "not started";
  }
  ++next_id_;
  g->worker = std::thread([raw = g.get()] { executor_loop(*raw); });
  sessions_[g->handle.session_id] = g;
  return g->handle;
}

std::shared_ptr<GatewaySession> Gateway::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kSessionNotFound, "no session with id '" + session_id + "'");
  }
  return it->second;
}

void Gateway::submit_prompt(const std::string& session_id, const std::string& text) {
  auto g = find(session_id);
  std::lock_guard lock(g->mu);
  if (g->busy) throw Error(ErrorCode::kBusy, "session " + session_id + " is mid-execution");
  if (g->handle.mode == MissionMode::kLlm && g->calls_used >= g->call_limit) {
    throw Error(ErrorCode::kBudgetExceeded,
                "call limit of " + std::to_string(g->call_limit) + " reached");
  }
  if (g->finished) throw Error(ErrorCode::kConflict, "session " + session_id + " has finished");
  if (g->stopping) throw Error(ErrorCode::kConflict, "gateway is shutting down");
  g->busy = true;
  GatewaySession* raw = g.get();
  if (g->handle.mode == MissionMode::kDirect) {
    g->tasks.push_back([raw] { run_direct_task(*raw); });
  } else {
    g->tasks.push_back([raw, text] { run_llm_task(*raw, text); });
  }
  g->cv.notify_all();
}

SessionHandle Gateway::handle(const std::string& session_id) const {
  auto g = find(session_id);
  std::lock_guard lock(g->mu);
  return g->handle;
}

std::vector<SessionHandle> Gateway::sessions() const {
  std::vector<std::shared_ptr<GatewaySession>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, g] : sessions_) all.push_back(g);
  }
  std::vector<SessionHandle> out;
  for (const auto& g : all) {
    std::lock_guard lock(g->mu);
    out.push_back(g->handle);
  }
  return out;
}

nlohmann::json Gateway::status(const std::string& session_id) const {
  auto g = find(session_id);
  std::lock_guard lock(g->mu);
  nlohmann::json j = handle_to_json(g->handle);
  j["busy"] = g->busy;
  j["status"] = status_name(g->status);
  j["halt_reason"] = g->halt_reason;
  j["calls_used"] = g->calls_used;
  j["call_limit"] = g->call_limit;
  j["accrued_cost"] = g->accrued_cost;
  j["collisions"] = g->collisions;
  j["sim_time"] = g->sim_time;
  j["pose"] = pose_to_json(g->pose);
  j["frames"] = g->frames.size();
  j["subscribers"] = g->subscribers;
  return j;
}

MissionLog Gateway::log(const std::string& session_id) const {
  auto g = find(session_id);
  std::lock_guard lock(g->mu);
  if (g->busy) throw Error(ErrorCode::kBusy, "session " + session_id + " is mid-execution");
  return g->settled_log;
}

TelemetrySubscription Gateway::subscribe(const std::string& session_id) const {
  return TelemetrySubscription(find(session_id));
}

bool Gateway::wait_settled(const std::string& session_id,
                           std::chrono::milliseconds timeout) const {
  auto g = find(session_id);
  std::unique_lock lock(g->mu);
  return g->cv.wait_for(lock, timeout, [&] { return !g->busy; });
}

void Gateway::shutdown() {
  std::vector<std::shared_ptr<GatewaySession>> all;
  {
    std::lock_guard lock(mu_);
    shut_down_ = true;
    for (const auto& [id, g] : sessions_) all.push_back(g);
  }
  for (const auto& g : all) {
    {
      std::lock_guard lock(g->mu);
      g->stopping = true;
      g->closed = true;
      g->cv.notify_all();
    }
    if (g->worker.joinable()) g->worker.join();
  }
}

}  // namespace uavllm
