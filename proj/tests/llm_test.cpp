#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "uavllm/error.hpp"
#include "uavllm/llm.hpp"

using namespace uavllm;

namespace {

const std::string kData = UAVLLM_DATA_DIR;

ApiBudget priced_budget(int limit = 10) {
  ApiBudget b;
  b.call_limit = limit;
  b.price_table = {{"test-model", {0.01, 0.03}}};
  return b;
}

ModelConfig test_config() {
  ModelConfig c;
  c.model_name = "test-model";
  return c;
}

std::vector<ChatTurn> opening(const std::string& user) {
  return {{Role::kSystem, "system prompt", {}, std::nullopt}, {Role::kUser, user, {}, std::nullopt}};
}

/// Counts invocations and returns a fixed reply.
class CountingProvider : public Provider {
 public:
  explicit CountingProvider(ProviderReply reply) : reply_(std::move(reply)) {}
  ProviderReply respond(const std::vector<ChatTurn>&, const std::vector<ToolSchema>&,
                        const ModelConfig&) override {
    ++calls;
    return reply_;
  }
  std::string name() const override { return "counting"; }
  int calls = 0;

 private:
  ProviderReply reply_;
};

template <typename F>
Error error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an Error";
  return Error(ErrorCode::kPlanningFailed, "none");
}

}  // namespace

TEST(Charge, Arithmetic) {
  const ApiBudget b = charge(priced_budget(), "test-model", 1000, 1000);
  EXPECT_NEAR(b.accrued_cost, 0.04, 1e-15);
  EXPECT_EQ(b.prompt_tokens, 1000);
  EXPECT_EQ(b.completion_tokens, 1000);
  const ApiBudget z = charge(b, "test-model", 0, 0);
  EXPECT_EQ(z.accrued_cost, b.accrued_cost);
  EXPECT_EQ(error_of([&] { charge(b, "other", 1, 1); }).code(), ErrorCode::kUnknownModel);
}

TEST(Charge, ShippedPriceTableParses) {
  const PriceTable t = load_price_table(kData + "/prices.json");
  EXPECT_FALSE(t.empty());
  EXPECT_TRUE(t.contains(ModelConfig{}.model_name));
}

TEST(ModelConfigTest, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.temperature, 0.0);
  c.temperature = 2.5;
  EXPECT_THROW(c.validate(), Error);
  c.temperature = 1.0;
  c.max_tokens = 0;
  EXPECT_THROW(c.validate(), Error);
  const ModelConfig d = model_config_from_json(model_config_to_json(test_config()));
  EXPECT_EQ(d.model_name, "test-model");
}

TEST(Complete, BudgetExceededBeforeProvider) {
  CountingProvider p({{Role::kAssistant, "hi", {}, std::nullopt}, std::nullopt});
  ApiBudget b = priced_budget(2);
  b.calls_used = 2;
  EXPECT_EQ(error_of([&] { complete(opening("go"), stream_schemas(), test_config(), b, p); }).code(),
            ErrorCode::kBudgetExceeded);
  EXPECT_EQ(p.calls, 0);
  EXPECT_EQ(b.calls_used, 2);
}

TEST(Complete, CountsOneCallAndEstimatesTokens) {
  CountingProvider p({{Role::kAssistant, "12345678", {}, std::nullopt}, std::nullopt});
  ApiBudget b = priced_budget();
  const ChatTurn t = complete(opening("go"), stream_schemas(), test_config(), b, p);
  EXPECT_EQ(t.content, "12345678");
  EXPECT_EQ(b.calls_used, 1);
  EXPECT_GT(b.prompt_tokens, 0);
  EXPECT_GT(b.completion_tokens, 0);
  EXPECT_GT(b.accrued_cost, 0.0);
  const double before = b.accrued_cost;
  complete(opening("go"), stream_schemas(), test_config(), b, p);
  EXPECT_EQ(b.calls_used, 2);
  EXPECT_GT(b.accrued_cost, before);
}

TEST(Complete, ReportedUsageIsCharged) {
  CountingProvider p({{Role::kAssistant, "x", {}, std::nullopt}, Usage{1000, 1000}});
  ApiBudget b = priced_budget();
  complete(opening("go"), stream_schemas(), test_config(), b, p);
  EXPECT_NEAR(b.accrued_cost, 0.04, 1e-15);
}

TEST(Complete, MalformedToolCallNamesField) {
  ChatTurn bad{Role::kAssistant, "", {{"c1", "moveAgent", {{"vx", 1}, {"vy", 0}, {"vz", 0}}}},
               std::nullopt};
  CountingProvider p({bad, std::nullopt});
  ApiBudget b = priced_budget();
  const Error e = error_of([&] { complete(opening("go"), stream_schemas(), test_config(), b, p); });
  EXPECT_EQ(e.code(), ErrorCode::kMalformedToolCall);
  EXPECT_NE(std::string(e.what()).find("duration"), std::string::npos);
  EXPECT_EQ(b.calls_used, 1);

  ChatTurn unknown{Role::kAssistant, "", {{"c1", "teleport", nlohmann::json::object()}},
                   std::nullopt};
  CountingProvider q({unknown, std::nullopt});
  EXPECT_EQ(error_of([&] { complete(opening("go"), stream_schemas(), test_config(), b, q); }).code(),
            ErrorCode::kMalformedToolCall);
}

TEST(Complete, Preconditions) {
  CountingProvider p({{Role::kAssistant, "x", {}, std::nullopt}, std::nullopt});
  ApiBudget b = priced_budget();
  EXPECT_EQ(error_of([&] { complete({}, stream_schemas(), test_config(), b, p); }).code(),
            ErrorCode::kInvalidArguments);
  std::vector<ChatTurn> no_system = {{Role::kUser, "go", {}, std::nullopt}};
  EXPECT_THROW(complete(no_system, stream_schemas(), test_config(), b, p), Error);
  ModelConfig unpriced;
  unpriced.model_name = "mystery";
  EXPECT_EQ(error_of([&] { complete(opening("go"), stream_schemas(), unpriced, b, p); }).code(),
            ErrorCode::kUnknownModel);
  EXPECT_EQ(p.calls, 0);
}

TEST(Scripted, FirstUnusedMatchWins) {
  const auto doc = nlohmann::json::parse(R"({
    "schema": "uav-fixture/1",
    "responders": [
      {"match": {"contains": "mission 1 start"},
       "reply": {"tool_calls": [{"id": "a", "name": "startMission",
                                 "arguments": {"mission_id": "mission-1"}}]}},
      {"match": {"tool_result_of": "startMission"},
       "reply": {"content": "started"}},
      {"match": {"last_role": "user"}, "repeat": true,
       "reply": {"content": "again"}}
    ]})");
  ScriptedProvider p = ScriptedProvider::from_json(doc);
  EXPECT_TRUE(p.schema_problems().empty());
  ApiBudget b = priced_budget();
  auto history = opening("mission 1 start");
  const ChatTurn t1 = complete(history, stream_schemas(), test_config(), b, p);
  ASSERT_EQ(t1.tool_calls.size(), 1u);
  EXPECT_EQ(t1.tool_calls[0].name, "startMission");
  history.push_back(t1);
  history.push_back({Role::kTool, R"({"streams":[]})", {}, "a"});
  EXPECT_EQ(complete(history, stream_schemas(), test_config(), b, p).content, "started");
  history.push_back({Role::kUser, "mission 1 start", {}, std::nullopt});
  // The first responder is used up; the repeatable one answers twice.
  EXPECT_EQ(complete(history, stream_schemas(), test_config(), b, p).content, "again");
  EXPECT_EQ(complete(history, stream_schemas(), test_config(), b, p).content, "again");
  history.push_back({Role::kAssistant, "done", {}, std::nullopt});
  EXPECT_EQ(error_of([&] { complete(history, stream_schemas(), test_config(), b, p); }).code(),
            ErrorCode::kProviderUnavailable);
}

TEST(Scripted, CallIndexAndToolError) {
  const auto doc = nlohmann::json::parse(R"({
    "schema": "uav-fixture/1",
    "responders": [
      {"match": {"call_index": 1, "tool_error": true}, "reply": {"content": "saw error"}},
      {"match": {"call_index": 0}, "reply": {"content": "first"}}
    ]})");
  ScriptedProvider p = ScriptedProvider::from_json(doc);
  auto history = opening("x");
  EXPECT_EQ(p.respond(history, {}, {}).turn.content, "first");
  history.push_back({Role::kTool, R"({"error":"LimitExceeded","message":"m"})", {}, "z"});
  EXPECT_EQ(p.respond(history, {}, {}).turn.content, "saw error");
}

TEST(Scripted, SchemaProblemsAreReported) {
  const auto doc = nlohmann::json::parse(R"({
    "schema": "uav-fixture/1",
    "responders": [
      {"reply": {"tool_calls": [{"name": "moveAgent", "arguments": {"vx": 1}}]}},
      {"malformed": true,
       "reply": {"tool_calls": [{"name": "moveAgent", "arguments": {"vx": 1}}]}}
    ]})");
  EXPECT_EQ(ScriptedProvider::from_json(doc).schema_problems().size(), 1u);
  EXPECT_THROW(ScriptedProvider::from_json(nlohmann::json::parse(R"({"responders": []})")), Error);
}

TEST(ChatTurns, JsonRoundTrip) {
  const ChatTurn a{Role::kAssistant, "t", {{"id1", "getAgentPosition", nlohmann::json::object()}},
                   std::nullopt};
  EXPECT_EQ(turn_from_json(turn_to_json(a)), a);
  const ChatTurn t{Role::kTool, "{}", {}, "id1"};
  EXPECT_EQ(turn_from_json(turn_to_json(t)), t);
  EXPECT_THROW(turn_from_json({{"role", "tool"}, {"content", "x"}}), Error);
}

TEST(SystemPrompt, MissionTwoCarriesBothClauses) {
  const MissionSpec m = load_mission_file(kData + "/missions/mission-2.json");
  const std::string p = build_system_prompt(m, m.prompt_constraints);
  EXPECT_NE(p.find("altitude change only"), std::string::npos);
  EXPECT_NE(p.find("not higher than 5 meters"), std::string::npos);
  EXPECT_NE(p.find("Constraints:"), std::string::npos);
  EXPECT_EQ(p, build_system_prompt(m, m.prompt_constraints));
  for (const auto& name : stream_names()) EXPECT_NE(p.find(name), std::string::npos);
  const std::string bare = build_system_prompt(m, {});
  EXPECT_EQ(bare.find("Constraints:"), std::string::npos);
  EXPECT_NE(bare.find("start (2, 10, 1), goal (18, 10, 1)"), std::string::npos);
}

TEST(HttpAdapter, RequestAndResponseShapes) {
  auto history = opening("go");
  history.push_back(
      {Role::kAssistant, "", {{"c1", "moveAgent", {{"vx", 1}, {"vy", 0}, {"vz", 0}, {"duration", 1}}}},
       std::nullopt});
  history.push_back({Role::kTool, "{}", {}, "c1"});
  const auto req = HttpProvider::build_request(history, stream_schemas(), test_config());
  EXPECT_EQ(req.at("model"), "test-model");
  EXPECT_EQ(req.at("temperature"), 0.0);
  EXPECT_EQ(req.at("messages").size(), 4u);
  EXPECT_TRUE(req.at("messages")[2].at("tool_calls")[0].at("function").at("arguments").is_string());
  EXPECT_EQ(req.at("messages")[3].at("tool_call_id"), "c1");
  EXPECT_EQ(req.at("tools").size(), 8u);
  EXPECT_FALSE(req.at("tools")[4].at("function").at("parameters").contains("x-order"));

  const auto body = nlohmann::json::parse(R"({
    "choices": [{"message": {"role": "assistant", "content": null,
      "tool_calls": [{"id": "t9", "type": "function",
        "function": {"name": "getAgentPosition", "arguments": "{}"}}]}}],
    "usage": {"prompt_tokens": 120, "completion_tokens": 7}})");
  const ProviderReply r = HttpProvider::parse_response(body);
  ASSERT_EQ(r.turn.tool_calls.size(), 1u);
  EXPECT_EQ(r.turn.tool_calls[0].id, "t9");
  EXPECT_EQ(r.usage->prompt_tokens, 120);
  EXPECT_EQ(error_of([] { HttpProvider::parse_response({{"choices", nlohmann::json::array()}}); })
                .code(),
            ErrorCode::kProviderUnavailable);
  auto broken = body;
  broken["choices"][0]["message"]["tool_calls"][0]["function"]["arguments"] = "{not json";
  EXPECT_EQ(error_of([&] { HttpProvider::parse_response(broken); }).code(),
            ErrorCode::kMalformedToolCall);
}

TEST(HttpAdapter, LoopbackRoundTrip) {
  httplib::Server server;
  std::string seen_auth;
  nlohmann::json seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"MISSION COMPLETE"}}],
                       "usage":{"prompt_tokens":10,"completion_tokens":2}})",
                    "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("UAVLLM_TEST_KEY", "secret-key", 1);
  HttpProviderConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.api_key_env = "UAVLLM_TEST_KEY";
  HttpProvider provider(cfg);
  ApiBudget b = priced_budget();
  const ChatTurn t = complete(opening("go"), stream_schemas(), test_config(), b, provider);
  EXPECT_EQ(t.content, "MISSION COMPLETE");
  EXPECT_EQ(seen_auth, "Bearer secret-key");
  EXPECT_EQ(seen_body.at("max_tokens"), 1024);
  EXPECT_EQ(b.prompt_tokens, 10);
  EXPECT_EQ(b.calls_used, 1);

  cfg.path = "/broken";
  HttpProvider broken(cfg);
  EXPECT_EQ(error_of([&] { broken.respond(opening("go"), {}, test_config()); }).code(),
            ErrorCode::kProviderUnavailable);
  cfg.api_key_env = "UAVLLM_UNSET_KEY_FOR_TEST";
  HttpProvider keyless(cfg);
  EXPECT_EQ(error_of([&] { keyless.respond(opening("go"), {}, test_config()); }).code(),
            ErrorCode::kProviderUnavailable);

  server.stop();
  th.join();
}
