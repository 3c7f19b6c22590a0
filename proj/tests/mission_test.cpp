#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "uavllm/error.hpp"
#include "uavllm/mission.hpp"

using namespace uavllm;

namespace {

const std::string kData = UAVLLM_DATA_DIR;

MissionSpec mission(const std::string& name) {
  return load_mission_file(kData + "/missions/" + name + ".json");
}

ScriptedProvider fixture(const std::string& name) {
  return ScriptedProvider::load_file(kData + "/fixtures/" + name + ".json");
}

LlmOptions options() {
  LlmOptions o;
  o.prices = load_price_table(kData + "/prices.json");
  return o;
}

MissionLog llm(const std::string& m, const std::string& f, std::optional<int> limit = {}) {
  ScriptedProvider p = fixture(f);
  LlmOptions o = options();
  o.call_limit = limit;
  return run_llm(mission(m), p, o);
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kPlanningFailed;
}

double motion_seconds(const MissionLog& log) {
  double total = 0.0;
  for (const auto& r : log.records) {
    if (r.direction == StreamDirection{Sense::kDownstream, 2} && r.args.contains("command")) {
      total += r.args.at("command").at("duration").get<double>();
    }
  }
  return total;
}

}  // namespace

TEST(Direct, MissionOneTurnsAtConstantAltitude) {
  const MissionLog log = run_direct(mission("mission-1"));
  EXPECT_EQ(log.status, MissionStatus::kReached);
  const MissionMetrics m = evaluate(log);
  EXPECT_TRUE(m.reached);
  EXPECT_EQ(m.net_collisions, 0);
  EXPECT_EQ(m.clearance_violations, 0);
  for (const auto& s : log.trajectory) EXPECT_NEAR(s.pose.position.z, 1.0, 0.01);
  EXPECT_TRUE(log.events.empty());
  EXPECT_TRUE(validate_ordering(log.records).ok);
}

TEST(Direct, MissionTwoClimbsOverOnTheStraightTrack) {
  const MissionLog log = run_direct(mission("mission-2"));
  EXPECT_EQ(log.status, MissionStatus::kReached);
  double zmax = 0.0;
  for (const auto& s : log.trajectory) {
    EXPECT_NEAR(s.pose.position.y, 10.0, 0.01);
    zmax = std::max(zmax, s.pose.position.z);
  }
  EXPECT_GE(zmax, 5.5 - 1e-9);
  EXPECT_EQ(evaluate(log).net_collisions, 0);
  // No obstacle geometry is read on the altitude path.
  for (const auto& r : log.records) EXPECT_NE(r.name, "getObstacleDimensions");
}

TEST(Direct, MissionThreeStaysOutsideClearanceBoundary) {
  const MissionLog log = run_direct(mission("mission-3"));
  const MissionMetrics m = evaluate(log);
  EXPECT_TRUE(m.reached);
  EXPECT_EQ(m.net_collisions, 0);
  ASSERT_TRUE(m.min_sphere_clearance);
  EXPECT_GE(*m.min_sphere_clearance, 2.0);
}

TEST(Direct, ComplexWorldChainsPlans) {
  const MissionLog log = run_direct(mission("mission-complex"));
  const MissionMetrics m = evaluate(log);
  EXPECT_TRUE(m.reached);
  EXPECT_EQ(m.net_collisions, 0);
  int avoids = 0;
  for (const auto& r : log.records) {
    if (r.name == "avoidObstacle" && r.direction == StreamDirection{Sense::kDownstream, 1}) ++avoids;
  }
  EXPECT_EQ(avoids, 4);
}

TEST(Direct, InvalidMissionsAndWorlds) {
  MissionSpec same = mission("mission-1");
  same.goal = same.start;
  EXPECT_EQ(code_of([&] { run_direct(same); }), ErrorCode::kInvalidMission);
  MissionSpec corrupt = mission("mission-1");
  corrupt.world_doc = {{"schema", "uav-world/1"}};
  EXPECT_EQ(code_of([&] { run_direct(corrupt); }), ErrorCode::kWorldFileInvalid);
}

TEST(Direct, ClockAdvancesOnlyByMotion) {
  for (const char* name : {"mission-1", "mission-2", "mission-3"}) {
    const MissionLog log = run_direct(mission(name));
    EXPECT_DOUBLE_EQ(log.sim_time, motion_seconds(log)) << name;
    for (std::size_t i = 1; i < log.trajectory.size(); ++i) {
      const double dt = log.trajectory[i].time - log.trajectory[i - 1].time;
      const double d = (log.trajectory[i].pose.position - log.trajectory[i - 1].pose.position).norm();
      EXPECT_LE(d, (2.0 + 1.0) * dt + 1e-9);
    }
  }
}

TEST(LogIo, NdjsonRoundTripIsByteStable) {
  const MissionLog log = llm("mission-1", "mission-1");
  const std::string text = log_to_ndjson(log);
  const MissionLog back = log_from_ndjson(text);
  EXPECT_EQ(log_to_ndjson(back), text);
  EXPECT_EQ(back.records, log.records);
  EXPECT_EQ(back.transcript, log.transcript);
  EXPECT_EQ(back.mission.world_ref, log.mission.world_ref);
}

TEST(LogIo, MalformedLogsRejected) {
  const std::string text = log_to_ndjson(run_direct(mission("mission-1")));
  EXPECT_EQ(code_of([&] { log_from_ndjson(text.substr(0, text.rfind("{\"budget\""))); }),
            ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([&] { log_from_ndjson("{\"record\":\"call\"}\n"); }), ErrorCode::kMalformedLog);
  EXPECT_EQ(code_of([&] { log_from_ndjson("not json\n"); }), ErrorCode::kMalformedLog);
}

TEST(Evaluate, EmptyMotionLog) {
  MissionLog log;
  log.mission = mission("mission-1");
  log.trajectory.push_back({0.0, Pose{{2, 10, 1}, 0, 0, 0}});
  const MissionMetrics m = evaluate(log);
  EXPECT_EQ(m.path_length, 0.0);
  EXPECT_FALSE(m.reached);
  EXPECT_FALSE(m.min_sphere_clearance);
  log.trajectory.clear();
  EXPECT_FALSE(evaluate(log).reached);
  log.trajectory = {{1.0, Pose{{2, 10, 1}, 0, 0, 0}}, {0.5, Pose{{3, 10, 1}, 0, 0, 0}}};
  EXPECT_EQ(code_of([&] { evaluate(log); }), ErrorCode::kMalformedLog);
}

TEST(Replay, DirectAndLlmLogsReplayExactly) {
  for (const char* name : {"mission-1", "mission-2", "mission-3", "mission-complex"}) {
    const MissionLog log = run_direct(mission(name));
    const MissionLog once = replay(log);
    EXPECT_EQ(log_to_ndjson(once), log_to_ndjson(log)) << name;
    EXPECT_EQ(log_to_ndjson(replay(once)), log_to_ndjson(once)) << name;
  }
  const MissionLog l = llm("mission-1", "mission-1-malformed-retry");
  EXPECT_EQ(log_to_ndjson(replay(l)), log_to_ndjson(l));
}

TEST(Replay, ReorderedOrEditedLogsDiverge) {
  const MissionLog log = run_direct(mission("mission-1"));
  MissionLog swapped = log;
  std::swap(swapped.records[3], swapped.records[4]);
  EXPECT_EQ(code_of([&] { replay(swapped); }), ErrorCode::kReplayDivergence);

  MissionLog edited = log;
  for (auto& r : edited.records) {
    if (r.name == "moveAgent" && r.direction == StreamDirection{Sense::kDownstream, 1}) {
      r.args["duration"] = 2.0;
    }
  }
  EXPECT_EQ(code_of([&] { replay(edited); }), ErrorCode::kReplayDivergence);
}

TEST(Llm, ShippedFixturesAreSchemaClean) {
  for (const char* f : {"mission-1", "mission-2", "mission-3", "mission-1-malformed-retry",
                        "immediate-done"}) {
    EXPECT_TRUE(fixture(f).schema_problems().empty()) << f;
  }
}

TEST(Llm, TableMissionsMatchDirectMode) {
  for (const char* name : {"mission-1", "mission-2", "mission-3"}) {
    const MissionLog a = llm(name, name);
    const MissionLog b = llm(name, name);
    EXPECT_EQ(a.status, MissionStatus::kReached) << name << " " << a.halt_reason;
    EXPECT_LT(a.budget.calls_used, 10) << name;
    EXPECT_EQ(transcript_to_json(a.transcript).dump(), transcript_to_json(b.transcript).dump());
    EXPECT_EQ(log_to_ndjson(a), log_to_ndjson(b));
    const MissionLog d = run_direct(mission(name));
    EXPECT_LE((a.final_pose.position - d.final_pose.position).norm(), a.mission.goal_tolerance);
    const MissionMetrics ma = evaluate(a);
    const MissionMetrics md = evaluate(d);
    EXPECT_EQ(ma.net_collisions, 0);
    EXPECT_LE(std::abs(ma.path_length - md.path_length), 2.0 * 0.5 + 1e-9) << name;
    EXPECT_TRUE(validate_ordering(a.records).ok);
    EXPECT_DOUBLE_EQ(a.sim_time, motion_seconds(a));
  }
}

TEST(Llm, ImmediateDoneHaltsWithoutMotion) {
  const MissionLog log = llm("mission-1", "immediate-done");
  EXPECT_EQ(log.status, MissionStatus::kHalted);
  EXPECT_FALSE(evaluate(log).reached);
  EXPECT_TRUE(log.records.empty());
  EXPECT_EQ(log.sim_time, 0.0);
  EXPECT_EQ(log.budget.calls_used, 1);
}

TEST(Llm, MalformedCallIsRetriedOnce) {
  const MissionLog log = llm("mission-1", "mission-1-malformed-retry");
  EXPECT_EQ(log.status, MissionStatus::kReached) << log.halt_reason;
  EXPECT_LT(log.budget.calls_used, 10);
  const auto it = std::find_if(log.transcript.begin(), log.transcript.end(), [](const ChatTurn& t) {
    return t.role == Role::kUser && t.content.find("rejected") != std::string::npos &&
           t.content.find("duration") != std::string::npos;
  });
  EXPECT_NE(it, log.transcript.end());
}

TEST(Llm, SecondConsecutiveMalformedCallHalts) {
  const auto doc = nlohmann::json::parse(R"({
    "schema": "uav-fixture/1",
    "responders": [
      {"repeat": true, "malformed": true,
       "reply": {"tool_calls": [{"name": "moveAgent", "arguments": {"vx": 1}}]}}
    ]})");
  ScriptedProvider p = ScriptedProvider::from_json(doc);
  const MissionLog log = run_llm(mission("mission-1"), p, options());
  EXPECT_EQ(log.status, MissionStatus::kHalted);
  EXPECT_EQ(log.budget.calls_used, 2);
}

TEST(Llm, BudgetExhaustion) {
  const MissionLog log = llm("mission-1", "mission-1", 3);
  EXPECT_EQ(log.status, MissionStatus::kBudgetExhausted);
  EXPECT_EQ(log.budget.calls_used, 3);
  EXPECT_TRUE(validate_ordering(log.records).ok);
  const MissionLog back = log_from_ndjson(log_to_ndjson(log));
  EXPECT_EQ(back.status, MissionStatus::kBudgetExhausted);
  EXPECT_EQ(log_to_ndjson(replay(back)), log_to_ndjson(log));

  ScriptedProvider p = fixture("mission-1");
  LlmOptions o = options();
  o.call_limit = 3;
  LlmMission run(mission("mission-1"), p, o);
  run.submit_prompt("go");
  EXPECT_EQ(run.state(), LlmState::kFinished);
  EXPECT_EQ(code_of([&] { run.submit_prompt("more"); }), ErrorCode::kBudgetExceeded);
}

TEST(Llm, ToolErrorsReachTheModel) {
  const auto doc = nlohmann::json::parse(R"({
    "schema": "uav-fixture/1",
    "responders": [
      {"match": {"call_index": 0},
       "reply": {"tool_calls": [{"id": "a", "name": "getAgentPosition", "arguments": {}}]}},
      {"match": {"tool_error": true}, "reply": {"content": "I need to start first."}}
    ]})");
  ScriptedProvider p = ScriptedProvider::from_json(doc);
  LlmMission run(mission("mission-1"), p, options());
  run.submit_prompt("go");
  EXPECT_EQ(run.state(), LlmState::kIdle);
  const auto& t = run.transcript();
  ASSERT_GE(t.size(), 4u);
  EXPECT_NE(t[3].content.find("NoActiveMission"), std::string::npos);
}
