#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "uavllm/error.hpp"
#include "uavllm/mission.hpp"
#include "uavllm/simd/kernels.hpp"

namespace uavllm {

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedLog, "malformed mission log: " + what);
}

nlohmann::json config_to_json(const SessionConfig& c) {
  return {{"max_h_speed", c.limits.max_h_speed},
          {"max_v_speed", c.limits.max_v_speed},
          {"attitude_limit", c.limits.attitude_limit},
          {"sample_dt", c.sample_dt},
          {"arc_step", c.arc_step}};
}

SessionConfig config_from_json(const nlohmann::json& j) {
  SessionConfig c;
  c.limits.max_h_speed = j.at("max_h_speed").get<double>();
  c.limits.max_v_speed = j.at("max_v_speed").get<double>();
  c.limits.attitude_limit = j.at("attitude_limit").get<double>();
  c.sample_dt = j.at("sample_dt").get<double>();
  c.arc_step = j.at("arc_step").get<double>();
  return c;
}

nlohmann::json event_to_json(const CollisionEvent& e) {
  return {{"sim_time", e.sim_time},       {"invocation", e.invocation},
          {"obstacle_id", e.obstacle_id}, {"solid", e.solid},
          {"from", vec_to_json(e.from)},  {"to", vec_to_json(e.to)}};
}

CollisionEvent event_from_json(const nlohmann::json& j) {
  return {j.at("sim_time").get<double>(),    j.at("invocation").get<std::uint64_t>(),
          j.at("obstacle_id").get<std::string>(), j.at("solid").get<bool>(),
          vec_from_json(j.at("from")),       vec_from_json(j.at("to"))};
}

/// Default maneuver for an obstacle under the mission's strategy constraint.
Strategy choose_strategy(StrategyConstraint constraint, const Obstacle& ob) {
  switch (constraint) {
    case StrategyConstraint::kAltitudeOnly: return Strategy::kAltitude;
    case StrategyConstraint::kCircumnavigate: return Strategy::kCircumnavigate;
    case StrategyConstraint::kAny: break;
  }
  return ob.is_cube() ? Strategy::kTurn : Strategy::kCircumnavigate;
}

/// Single constant-velocity command from `from` to `to` at the fastest speed
/// the limits allow.
VelocityCommand straight_command(Vec3 from, Vec3 to, const AgentLimits& limits) {
  const Vec3 d = to - from;
  const double t = std::max(d.norm_xy() / limits.max_h_speed, std::abs(d.z) / limits.max_v_speed);
  return {d.x / t, d.y / t, d.z / t, t};
}

}  // namespace

std::string_view mode_name(MissionMode mode) {
  return mode == MissionMode::kDirect ? "direct" : "llm";
}

MissionMode parse_mode(std::string_view name) {
  if (name == "direct") return MissionMode::kDirect;
  if (name == "llm") return MissionMode::kLlm;
  throw Error(ErrorCode::kInvalidArguments, "unknown mode '" + std::string(name) + "'");
}

std::string_view status_name(MissionStatus status) {
  switch (status) {
    case MissionStatus::kReached: return "reached";
    case MissionStatus::kHalted: return "halted";
    case MissionStatus::kBudgetExhausted: return "budget_exhausted";
  }
  return "halted";
}

MissionStatus parse_status(std::string_view name) {
  for (auto s : {MissionStatus::kReached, MissionStatus::kHalted, MissionStatus::kBudgetExhausted}) {
    if (status_name(s) == name) return s;
  }
  throw Error(ErrorCode::kMalformedLog, "unknown status '" + std::string(name) + "'");
}

std::string_view llm_state_name(LlmState state) {
  switch (state) {
    case LlmState::kIdle: return "idle";
    case LlmState::kAwaitingLlm: return "awaiting_llm";
    case LlmState::kExecuting: return "executing";
    case LlmState::kFinished: return "finished";
  }
  return "idle";
}

// ---------------------------------------------------------------------------
// Log IO

std::string log_to_ndjson(const MissionLog& log) {
  std::string out;
  auto line = [&](const nlohmann::json& j) {
    out += j.dump();
    out += '\n';
  };
  line({{"record", "header"},
        {"schema", kLogSchema},
        {"mode", mode_name(log.mode)},
        {"mission", mission_to_json(log.mission)},
        {"config", config_to_json(log.config)},
        {"provider", log.provider},
        {"model", log.model ? model_config_to_json(*log.model) : nlohmann::json()}});
  for (const StreamCall& c : log.records) {
    nlohmann::json j = call_to_json(c);
    j["record"] = "call";
    line(j);
  }
  for (const TrajectorySample& s : log.trajectory) {
    line({{"record", "sample"}, {"time", s.time}, {"pose", pose_to_json(s.pose)}});
  }
  for (const CollisionEvent& e : log.events) {
    nlohmann::json j = event_to_json(e);
    j["record"] = "event";
    line(j);
  }
  for (const ChatTurn& t : log.transcript) {
    nlohmann::json j = turn_to_json(t);
    j["record"] = "turn";
    line(j);
  }
  line({{"record", "footer"},
        {"status", status_name(log.status)},
        {"halt_reason", log.halt_reason},
        {"budget", budget_to_json(log.budget)},
        {"final_pose", pose_to_json(log.final_pose)},
        {"sim_time", log.sim_time}});
  return out;
}

MissionLog log_from_ndjson(const std::string& text) {
  MissionLog log;
  std::istringstream in(text);
  std::string raw;
  bool header = false;
  bool footer = false;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty()) continue;
    if (footer) malformed("content after the footer");
    const auto j = nlohmann::json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("record")) {
      malformed("line " + std::to_string(line_no) + " is not a log record");
    }
    try {
      const std::string kind = j.at("record").get<std::string>();
      if (!header && kind != "header") malformed("first record must be the header");
      if (kind == "header") {
        if (header) malformed("duplicate header");
        if (j.at("schema") != kLogSchema) malformed("unsupported schema");
        header = true;
        log.mode = parse_mode(j.at("mode").get<std::string>());
        log.mission = mission_from_json(j.at("mission"));
        log.config = config_from_json(j.at("config"));
        log.provider = j.value("provider", "");
        if (!j.at("model").is_null()) log.model = model_config_from_json(j.at("model"));
      } else if (kind == "call") {
        log.records.push_back(call_from_json(j));
      } else if (kind == "sample") {
        log.trajectory.push_back({j.at("time").get<double>(), pose_from_json(j.at("pose"))});
      } else if (kind == "event") {
        log.events.push_back(event_from_json(j));
      } else if (kind == "turn") {
        log.transcript.push_back(turn_from_json(j));
      } else if (kind == "footer") {
        footer = true;
        log.status = parse_status(j.at("status").get<std::string>());
        log.halt_reason = j.value("halt_reason", "");
        const auto& b = j.at("budget");
        log.budget.call_limit = b.at("call_limit").get<int>();
        log.budget.calls_used = b.at("calls_used").get<int>();
        log.budget.prompt_tokens = b.at("prompt_tokens").get<long long>();
        log.budget.completion_tokens = b.at("completion_tokens").get<long long>();
        log.budget.accrued_cost = b.at("accrued_cost").get<double>();
        log.final_pose = pose_from_json(j.at("final_pose"));
        log.sim_time = j.at("sim_time").get<double>();
      } else {
        malformed("unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      malformed("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kMalformedLog) throw;
      malformed("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) malformed("missing header");
  if (!footer) malformed("missing footer (truncated log)");
  return log;
}

void write_log_file(const MissionLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArguments, "cannot write " + path);
  out << log_to_ndjson(log);
}

MissionLog read_log_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMalformedLog, "cannot open log " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return log_from_ndjson(buf.str());
}

// ---------------------------------------------------------------------------
// Direct control

MissionLog run_direct(const MissionSpec& mission, const SessionConfig& config,
                      const DirectObserver& observer) {
  validate_mission(mission);
  Session s({mission}, config);
  if (observer) s.set_observer([&](const StreamCall& c) { observer(s, c); });
  s.start_mission(mission.id);
  s.get_mission_coordinates();
  s.sense_environment();
  const WorldDescription& world = *s.world();

  MissionLog log;
  log.mission = mission;
  log.mode = MissionMode::kDirect;
  log.config = config;
  log.budget.call_limit = mission.call_limit;
  log.status = MissionStatus::kHalted;

  // Each avoidance either reaches the goal or passes one obstacle, so the
  // loop is bounded by the obstacle count plus the final straight leg.
  const std::size_t max_steps = 2 * world.obstacles.size() + 3;
  try {
    for (std::size_t step = 0; step < max_steps; ++step) {
      s.next_turn();
      const Vec3 here = s.get_agent_position().pose.position;
      if ((mission.goal - here).norm() <= mission.goal_tolerance) {
        log.status = MissionStatus::kReached;
        break;
      }
      if (s.sim_time() > mission.timeout) {
        log.halt_reason = "simulated time limit exceeded";
        break;
      }
      const Obstacle* blocking =
          find_blocking_obstacle(here, mission.goal, world.obstacles, mission.margin);
      if (blocking) {
        const Strategy strategy = choose_strategy(mission.constraint, *blocking);
        // The altitude bypass deliberately works from the declared bound only.
        if (strategy != Strategy::kAltitude) s.get_obstacle_dimensions(blocking->id);
        s.avoid_obstacle(blocking->id, strategy);
      } else {
        s.move_agent(straight_command(here, mission.goal, config.limits));
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kWorldFileInvalid) throw;
    throw Error(ErrorCode::kPlanningFailed,
                "mission '" + mission.id + "' could not be planned: " + e.what());
  }
  if (log.status != MissionStatus::kReached && log.halt_reason.empty()) {
    throw Error(ErrorCode::kPlanningFailed,
                "mission '" + mission.id + "' did not reach the goal within the step bound");
  }
  s.complete_mission();
  log.records = s.records();
  log.trajectory = s.trajectory();
  log.events = s.collision_events();
  log.final_pose = s.pose();
  log.sim_time = s.sim_time();
  return log;
}

// ---------------------------------------------------------------------------
// Model control

LlmMission::LlmMission(MissionSpec mission, Provider& provider, LlmOptions options,
                       SessionConfig config)
    : mission_(std::move(mission)),
      provider_(provider),
      options_(std::move(options)),
      session_({mission_}, config) {
  validate_mission(mission_);
  options_.model.validate();
  budget_.call_limit = options_.call_limit.value_or(mission_.call_limit);
  budget_.price_table = options_.prices;
  if (options_.model.system_prompt.empty()) {
    options_.model.system_prompt = build_system_prompt(mission_, mission_.prompt_constraints);
  }
  transcript_.push_back({Role::kSystem, options_.model.system_prompt, {}, std::nullopt});
}

void LlmMission::set_record_observer(RecordObserver observer) {
  session_.set_observer(std::move(observer));
}

void LlmMission::set_state(LlmState s) {
  state_ = s;
  if (on_state_) on_state_(s);
}

void LlmMission::finish(MissionStatus status, std::string reason) {
  status_ = status;
  halt_reason_ = std::move(reason);
  set_state(LlmState::kFinished);
}

bool LlmMission::at_goal() const {
  return (mission_.goal - session_.pose().position).norm() <= mission_.goal_tolerance;
}

void LlmMission::submit_prompt(const std::string& text) {
  if (state_ == LlmState::kAwaitingLlm || state_ == LlmState::kExecuting) {
    throw Error(ErrorCode::kBusy, "mission loop is running");
  }
  if (budget_.exhausted()) {
    throw Error(ErrorCode::kBudgetExceeded,
                "call limit of " + std::to_string(budget_.call_limit) + " reached");
  }
  transcript_.push_back({Role::kUser, text, {}, std::nullopt});
  run_loop();
}

void LlmMission::run_loop() {
  int malformed_streak = 0;
  const std::vector<ToolSchema>& tools = stream_schemas();
  while (true) {
    set_state(LlmState::kAwaitingLlm);
    ChatTurn turn;
    try {
      turn = complete(transcript_, tools, options_.model, budget_, provider_);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kBudgetExceeded) {
        finish(MissionStatus::kBudgetExhausted, e.what());
        return;
      }
      if (e.code() == ErrorCode::kMalformedToolCall && ++malformed_streak == 1) {
        transcript_.push_back({Role::kUser,
                               std::string("Your last reply was rejected: ") + e.what() +
                                   ". Reissue the tool call with valid arguments.",
                               {},
                               std::nullopt});
        continue;
      }
      finish(MissionStatus::kHalted, e.what());
      return;
    }
    malformed_streak = 0;
    transcript_.push_back(turn);
    if (turn.tool_calls.empty()) {
      if (turn.content.find(options_.completion_marker) != std::string::npos) {
        if (at_goal()) {
          finish(MissionStatus::kReached, "");
        } else {
          finish(MissionStatus::kHalted, "completion declared away from the goal");
        }
      } else {
        status_ = at_goal() ? MissionStatus::kReached : MissionStatus::kHalted;
        halt_reason_ = "model yielded without declaring completion";
        set_state(LlmState::kIdle);
      }
      return;
    }
    set_state(LlmState::kExecuting);
    session_.next_turn();
    for (const ToolCall& call : turn.tool_calls) {
      nlohmann::json result;
      try {
        result = session_.invoke(call.name, call.arguments);
      } catch (const Error& e) {
        result = error_to_json(e);
      }
      transcript_.push_back({Role::kTool, result.dump(), {}, call.id});
    }
    if (session_.sim_time() > mission_.timeout) {
      finish(MissionStatus::kHalted, "simulated time limit exceeded");
      return;
    }
  }
}

MissionLog LlmMission::log() const {
  MissionLog log;
  log.mission = mission_;
  log.mode = MissionMode::kLlm;
  log.config = session_.config();
  log.provider = provider_.name();
  log.model = options_.model;
  log.records = session_.records();
  log.trajectory = session_.trajectory();
  log.events = session_.collision_events();
  log.transcript = transcript_;
  log.budget = budget_;
  log.budget.price_table.clear();
  log.status = status_;
  log.halt_reason = halt_reason_;
  log.final_pose = session_.pose();
  log.sim_time = session_.sim_time();
  return log;
}

MissionLog run_llm(const MissionSpec& mission, Provider& provider, const LlmOptions& options,
                   const SessionConfig& config) {
  LlmMission run(mission, provider, options, config);
  run.submit_prompt(mission.user_prompt.empty() ? "Fly mission " + mission.id + "."
                                                : mission.user_prompt);
  return run.log();
}

// ---------------------------------------------------------------------------
// Evaluation and replay

nlohmann::json metrics_to_json(const MissionMetrics& m) {
  return {{"reached", m.reached},
          {"path_length", m.path_length},
          {"net_collisions", m.net_collisions},
          {"clearance_violations", m.clearance_violations},
          {"min_sphere_clearance",
           m.min_sphere_clearance ? nlohmann::json(*m.min_sphere_clearance) : nlohmann::json()},
          {"calls_used", m.calls_used},
          {"sim_duration", m.sim_duration}};
}

MissionMetrics evaluate(const MissionLog& log) {
  for (std::size_t i = 1; i < log.trajectory.size(); ++i) {
    if (log.trajectory[i].time < log.trajectory[i - 1].time) malformed("sample times decrease");
  }
  const WorldDescription world = world_from_json(log.mission.world_doc);
  MissionMetrics m;
  // A mission that never started leaves the agent parked at its start point.
  std::vector<TrajectorySample> parked;
  if (log.trajectory.empty()) parked.push_back({0.0, Pose{log.mission.start, 0.0, 0.0, 0.0}});
  const auto& samples = log.trajectory.empty() ? parked : log.trajectory;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const Vec3 a = samples[i - 1].pose.position;
    const Vec3 b = samples[i].pose.position;
    m.path_length += (b - a).norm();
    const CollisionReport r = collision_check(world.obstacles, a, b);
    if (r.collided()) ++m.net_collisions;
    if (!r.clearance_violations.empty()) ++m.clearance_violations;
  }
  std::vector<double> xs, ys, zs;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  zs.reserve(samples.size());
  for (const auto& s : samples) {
    xs.push_back(s.pose.position.x);
    ys.push_back(s.pose.position.y);
    zs.push_back(s.pose.position.z);
  }
  const simd::KernelTable& k = simd::active_kernels();
  for (const Obstacle& ob : world.obstacles) {
    if (!ob.is_sphere()) continue;
    const double d = std::sqrt(k.min_distance_sq(xs, ys, zs, ob.sphere().center));
    m.min_sphere_clearance = m.min_sphere_clearance ? std::min(*m.min_sphere_clearance, d) : d;
  }
  m.reached = (log.mission.goal - samples.back().pose.position).norm() <= log.mission.goal_tolerance;
  m.calls_used = log.budget.calls_used;
  m.sim_duration = samples.back().time - samples.front().time;
  return m;
}

MissionLog replay(const MissionLog& log) {
  const OrderingReport order = validate_ordering(log.records);
  if (!order.ok) {
    throw Error(ErrorCode::kReplayDivergence,
                "log is misordered at call " + std::to_string(*order.violation_call_id) + ": " +
                    order.message);
  }
  Session s({log.mission}, log.config);
  for (const StreamCall& c : log.records) {
    if (c.parent || c.direction != StreamDirection{Sense::kDownstream, 1}) continue;
    while (s.turn() < c.turn) s.next_turn();
    try {
      s.invoke(c.name, c.args);
    } catch (const Error&) {
      // Failures are part of the record and are compared below.
    }
  }
  MissionLog out = log;
  out.records = s.records();
  out.trajectory = s.trajectory();
  out.events = s.collision_events();
  out.final_pose = s.pose();
  out.sim_time = s.sim_time();

  const std::size_t n = std::min(out.records.size(), log.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(out.records[i] == log.records[i])) {
      throw Error(ErrorCode::kReplayDivergence,
                  "replay diverges at call " + std::to_string(log.records[i].call_id));
    }
  }
  if (out.records.size() != log.records.size()) {
    throw Error(ErrorCode::kReplayDivergence, "replay produced a different number of records");
  }
  if (out.trajectory != log.trajectory || out.events != log.events ||
      !(out.final_pose == log.final_pose) || out.sim_time != log.sim_time) {
    throw Error(ErrorCode::kReplayDivergence, "replay reproduced the calls but not the motion");
  }
  return out;
}

}  // namespace uavllm
