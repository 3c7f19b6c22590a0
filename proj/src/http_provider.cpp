#include <cstdlib>

#include <httplib.h>

#include "uavllm/error.hpp"
#include "uavllm/llm.hpp"

namespace uavllm {

namespace {

/// Strips repository-only annotations ("x-order", "x-unit") so the request
/// carries plain JSON Schema.
nlohmann::json wire_tool(const ToolSchema& schema) {
  nlohmann::json j = schema_to_json(schema);
  auto& params = j["function"]["parameters"];
  params.erase("x-order");
  for (auto& [name, prop] : params["properties"].items()) {
    if (prop.contains("x-unit")) {
      prop["description"] = prop["description"].get<std::string>() + " Unit: " +
                            prop["x-unit"].get<std::string>() + ".";
      prop.erase("x-unit");
    }
  }
  return j;
}

nlohmann::json wire_message(const ChatTurn& t) {
  nlohmann::json m = {{"role", role_name(t.role)}, {"content", t.content}};
  if (!t.tool_calls.empty()) {
    m["tool_calls"] = nlohmann::json::array();
    for (const ToolCall& c : t.tool_calls) {
      m["tool_calls"].push_back({{"id", c.id},
                                 {"type", "function"},
                                 {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
    }
  }
  if (t.tool_call_id) m["tool_call_id"] = *t.tool_call_id;
  return m;
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

nlohmann::json HttpProvider::build_request(const std::vector<ChatTurn>& history,
                                           const std::vector<ToolSchema>& tools,
                                           const ModelConfig& config) {
  nlohmann::json body = {{"model", config.model_name},
                         {"max_tokens", config.max_tokens},
                         {"temperature", config.temperature}};
  if (config.seed) body["seed"] = *config.seed;
  body["messages"] = nlohmann::json::array();
  for (const ChatTurn& t : history) body["messages"].push_back(wire_message(t));
  if (!tools.empty()) {
    body["tools"] = nlohmann::json::array();
    for (const ToolSchema& s : tools) body["tools"].push_back(wire_tool(s));
    body["tool_choice"] = "auto";
  }
  return body;
}

ProviderReply HttpProvider::parse_response(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty() || !body["choices"][0].contains("message")) {
    throw Error(ErrorCode::kProviderUnavailable, "response carries no assistant message");
  }
  const auto& msg = body["choices"][0]["message"];
  ProviderReply reply;
  reply.turn.role = Role::kAssistant;
  if (msg.contains("content") && msg["content"].is_string()) {
    reply.turn.content = msg["content"].get<std::string>();
  }
  if (msg.contains("tool_calls") && msg["tool_calls"].is_array()) {
    for (const auto& c : msg["tool_calls"]) {
      ToolCall call;
      try {
        call.id = c.value("id", "");
        call.name = c.at("function").at("name").get<std::string>();
        const auto& raw = c.at("function").at("arguments");
        call.arguments = raw.is_string() ? nlohmann::json::parse(raw.get<std::string>()) : raw;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kMalformedToolCall,
                    std::string("unparsable tool call arguments: ") + e.what());
      }
      reply.turn.tool_calls.push_back(std::move(call));
    }
  }
  if (body.contains("usage") && body["usage"].is_object()) {
    const auto& u = body["usage"];
    reply.usage = Usage{u.value("prompt_tokens", 0LL), u.value("completion_tokens", 0LL)};
  }
  return reply;
}

ProviderReply HttpProvider::respond(const std::vector<ChatTurn>& history,
                                    const std::vector<ToolSchema>& tools,
                                    const ModelConfig& config) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (!key || !*key) {
    throw Error(ErrorCode::kProviderUnavailable,
                "environment variable " + config_.api_key_env + " is not set");
  }
  httplib::Client client(config_.base_url);
  if (!client.is_valid()) {
    throw Error(ErrorCode::kProviderUnavailable, "unusable base URL " + config_.base_url);
  }
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_bearer_token_auth(key);
  const std::string body = build_request(history, tools, config).dump();
  auto res = client.Post(config_.path, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kProviderUnavailable,
                "request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderUnavailable,
                "provider answered HTTP " + std::to_string(res->status));
  }
  const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw Error(ErrorCode::kProviderUnavailable, "response is not JSON");
  return parse_response(parsed);
}

}  // namespace uavllm
