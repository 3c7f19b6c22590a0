#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uavllm/error.hpp"
#include "uavllm/llm.hpp"

namespace uavllm {

namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string fmt_vec(Vec3 v) {
  return "(" + fmt_num(v.x) + ", " + fmt_num(v.y) + ", " + fmt_num(v.z) + ")";
}

nlohmann::json read_json_file(const std::string& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json doc = nlohmann::json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded()) throw Error(code, path + " is not JSON");
  return doc;
}

/// Name of the stream a tool turn answers, looked up through the assistant
/// turn that issued the call.
std::optional<std::string> answered_stream(const std::vector<ChatTurn>& history) {
  if (history.empty() || history.back().role != Role::kTool || !history.back().tool_call_id) {
    return std::nullopt;
  }
  const std::string& id = *history.back().tool_call_id;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    for (const ToolCall& c : it->tool_calls) {
      if (c.id == id) return c.name;
    }
  }
  return std::nullopt;
}

bool is_error_result(const std::string& content) {
  const auto j = nlohmann::json::parse(content, nullptr, false);
  return !j.is_discarded() && j.is_object() && j.contains("error");
}

}  // namespace

// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (model_name.empty()) throw Error(ErrorCode::kInvalidArguments, "model_name is empty");
  if (max_tokens <= 0) throw Error(ErrorCode::kInvalidArguments, "max_tokens must be positive");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::kInvalidArguments, "temperature must lie in [0, 2]");
  }
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  nlohmann::json j = {{"model_name", c.model_name},
                      {"max_tokens", c.max_tokens},
                      {"temperature", c.temperature},
                      {"system_prompt", c.system_prompt}};
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.model_name = j.value("model_name", c.model_name);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.temperature = j.value("temperature", c.temperature);
    c.system_prompt = j.value("system_prompt", c.system_prompt);
    if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArguments, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kTool: return "tool";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  for (Role r : {Role::kSystem, Role::kUser, Role::kAssistant, Role::kTool}) {
    if (role_name(r) == name) return r;
  }
  throw Error(ErrorCode::kInvalidArguments, "unknown role '" + std::string(name) + "'");
}

nlohmann::json turn_to_json(const ChatTurn& t) {
  nlohmann::json j = {{"role", role_name(t.role)}, {"content", t.content}};
  if (!t.tool_calls.empty()) {
    j["tool_calls"] = nlohmann::json::array();
    for (const ToolCall& c : t.tool_calls) {
      j["tool_calls"].push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
    }
  }
  if (t.tool_call_id) j["tool_call_id"] = *t.tool_call_id;
  return j;
}

ChatTurn turn_from_json(const nlohmann::json& j) {
  try {
    ChatTurn t;
    t.role = parse_role(j.at("role").get<std::string>());
    t.content = j.value("content", "");
    if (j.contains("tool_calls")) {
      for (const auto& c : j.at("tool_calls")) {
        t.tool_calls.push_back({c.value("id", ""), c.at("name").get<std::string>(),
                                c.value("arguments", nlohmann::json::object())});
      }
    }
    if (j.contains("tool_call_id")) t.tool_call_id = j.at("tool_call_id").get<std::string>();
    if (t.role == Role::kTool && !t.tool_call_id) {
      throw Error(ErrorCode::kInvalidArguments, "tool turn without tool_call_id");
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArguments, std::string("malformed chat turn: ") + e.what());
  }
}

nlohmann::json transcript_to_json(const std::vector<ChatTurn>& transcript) {
  nlohmann::json j = nlohmann::json::array();
  for (const ChatTurn& t : transcript) j.push_back(turn_to_json(t));
  return j;
}

// ---------------------------------------------------------------------------

PriceTable price_table_from_json(const nlohmann::json& j) {
  PriceTable table;
  try {
    for (auto it = j.at("models").begin(); it != j.at("models").end(); ++it) {
      table[it.key()] = {it.value().at("input_per_1k").get<double>(),
                         it.value().at("output_per_1k").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArguments, std::string("malformed price table: ") + e.what());
  }
  return table;
}

PriceTable load_price_table(const std::string& path) {
  return price_table_from_json(read_json_file(path, ErrorCode::kInvalidArguments));
}

nlohmann::json budget_to_json(const ApiBudget& b) {
  return {{"call_limit", b.call_limit},
          {"calls_used", b.calls_used},
          {"prompt_tokens", b.prompt_tokens},
          {"completion_tokens", b.completion_tokens},
          {"accrued_cost", b.accrued_cost}};
}

ApiBudget charge(ApiBudget budget, const std::string& model_name, long long prompt_tokens,
                 long long completion_tokens) {
  const auto it = budget.price_table.find(model_name);
  if (it == budget.price_table.end()) {
    throw Error(ErrorCode::kUnknownModel, "no price for model '" + model_name + "'");
  }
  if (prompt_tokens < 0 || completion_tokens < 0) {
    throw Error(ErrorCode::kInvalidArguments, "token counts must be non-negative");
  }
  budget.prompt_tokens += prompt_tokens;
  budget.completion_tokens += completion_tokens;
  budget.accrued_cost += static_cast<double>(prompt_tokens) / 1000.0 * it->second.input_per_1k +
                         static_cast<double>(completion_tokens) / 1000.0 * it->second.output_per_1k;
  return budget;
}

long long estimate_tokens(std::string_view text) {
  return static_cast<long long>((text.size() + 3) / 4);
}

// ---------------------------------------------------------------------------

ScriptedProvider::ScriptedProvider(std::vector<Responder> responders, std::string label)
    : responders_(std::move(responders)), label_(std::move(label)) {}

ScriptedProvider ScriptedProvider::from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("schema", "") != "uav-fixture/1") {
      throw Error(ErrorCode::kInvalidArguments, "fixture schema must be uav-fixture/1");
    }
    std::vector<Responder> responders;
    int n = 0;
    for (const auto& r : doc.at("responders")) {
      Responder resp;
      const auto match = r.value("match", nlohmann::json::object());
      if (match.contains("call_index")) resp.match.call_index = match.at("call_index").get<int>();
      if (match.contains("last_role")) {
        resp.match.last_role = parse_role(match.at("last_role").get<std::string>());
      }
      if (match.contains("contains")) resp.match.contains = match.at("contains").get<std::string>();
      if (match.contains("tool_result_of")) {
        resp.match.tool_result_of = match.at("tool_result_of").get<std::string>();
      }
      if (match.contains("tool_error")) resp.match.tool_error = match.at("tool_error").get<bool>();
      const auto& reply = r.at("reply");
      resp.reply.role = Role::kAssistant;
      resp.reply.content = reply.value("content", "");
      int k = 0;
      for (const auto& c : reply.value("tool_calls", nlohmann::json::array())) {
        ToolCall call;
        call.id = c.value("id", "call-" + std::to_string(n) + "-" + std::to_string(k));
        call.name = c.at("name").get<std::string>();
        call.arguments = c.value("arguments", nlohmann::json::object());
        resp.reply.tool_calls.push_back(std::move(call));
        ++k;
      }
      if (r.contains("usage")) {
        resp.usage = Usage{r.at("usage").at("prompt_tokens").get<long long>(),
                           r.at("usage").at("completion_tokens").get<long long>()};
      }
      resp.repeat = r.value("repeat", false);
      resp.malformed = r.value("malformed", false);
      responders.push_back(std::move(resp));
      ++n;
    }
    return ScriptedProvider(std::move(responders), doc.value("label", "scripted"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArguments, std::string("malformed fixture: ") + e.what());
  }
}

ScriptedProvider ScriptedProvider::load_file(const std::string& path) {
  return from_json(read_json_file(path, ErrorCode::kInvalidArguments));
}

std::vector<std::string> ScriptedProvider::schema_problems() const {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < responders_.size(); ++i) {
    if (responders_[i].malformed) continue;
    for (const ToolCall& c : responders_[i].reply.tool_calls) {
      const ToolSchema* schema = find_schema(c.name);
      if (!schema) {
        problems.push_back("responder " + std::to_string(i) + ": unknown stream " + c.name);
      } else if (auto p = validate_args(*schema, c.arguments)) {
        problems.push_back("responder " + std::to_string(i) + ": " + c.name + "." + p->field +
                           ": " + p->reason);
      }
    }
  }
  return problems;
}

ProviderReply ScriptedProvider::respond(const std::vector<ChatTurn>& history,
                                        const std::vector<ToolSchema>&, const ModelConfig&) {
  const int index = calls_++;
  const ChatTurn* last = history.empty() ? nullptr : &history.back();
  for (std::size_t i = 0; i < responders_.size(); ++i) {
    const Responder& r = responders_[i];
    if (!r.repeat && used_.contains(i)) continue;
    const ResponderMatch& m = r.match;
    if (m.call_index && *m.call_index != index) continue;
    if (m.last_role && (!last || last->role != *m.last_role)) continue;
    if (m.contains && (!last || last->content.find(*m.contains) == std::string::npos)) continue;
    if (m.tool_result_of && answered_stream(history) != *m.tool_result_of) continue;
    if (m.tool_error &&
        (!last || last->role != Role::kTool || is_error_result(last->content) != *m.tool_error)) {
      continue;
    }
    used_.insert(i);
    return {r.reply, r.usage};
  }
  throw Error(ErrorCode::kProviderUnavailable,
              "scripted provider has no responder for call " + std::to_string(index));
}

// ---------------------------------------------------------------------------

ChatTurn complete(const std::vector<ChatTurn>& history, const std::vector<ToolSchema>& tools,
                  const ModelConfig& config, ApiBudget& budget, Provider& provider) {
  if (budget.exhausted()) {
    throw Error(ErrorCode::kBudgetExceeded,
                "call limit of " + std::to_string(budget.call_limit) + " reached");
  }
  if (history.empty() || history.front().role != Role::kSystem) {
    throw Error(ErrorCode::kInvalidArguments, "history must start with the system prompt");
  }
  if (!budget.price_table.contains(config.model_name)) {
    throw Error(ErrorCode::kUnknownModel, "no price for model '" + config.model_name + "'");
  }
  ProviderReply reply = provider.respond(history, tools, config);
  reply.turn.role = Role::kAssistant;

  Usage usage;
  if (reply.usage) {
    usage = *reply.usage;
  } else {
    std::string prompt_text;
    for (const ChatTurn& t : history) prompt_text += turn_to_json(t).dump();
    for (const ToolSchema& s : tools) prompt_text += schema_to_json(s).dump();
    usage = {estimate_tokens(prompt_text), estimate_tokens(turn_to_json(reply.turn).dump())};
  }
  budget = charge(budget, config.model_name, usage.prompt_tokens, usage.completion_tokens);
  budget.calls_used += 1;

  for (const ToolCall& c : reply.turn.tool_calls) {
    const ToolSchema* schema = nullptr;
    for (const ToolSchema& s : tools) {
      if (s.name == c.name) schema = &s;
    }
    if (!schema) {
      throw Error(ErrorCode::kMalformedToolCall, "unknown tool '" + c.name + "'");
    }
    if (auto p = validate_args(*schema, c.arguments)) {
      throw Error(ErrorCode::kMalformedToolCall,
                  c.name + ": " + (p->field.empty() ? "" : p->field + ": ") + p->reason);
    }
  }
  return reply.turn;
}

// ---------------------------------------------------------------------------

std::string build_system_prompt(const MissionSpec& mission,
                                const std::vector<std::string>& constraints) {
  std::ostringstream out;
  out << "You are the guidance, navigation and control assistant of a simulated UAV agent. "
         "You act only by calling the interaction-stream tools listed below, one step at a "
         "time, and you read each tool result before deciding the next step.\n\n";

  out << "World:\n";
  try {
    const WorldDescription w = world_from_json(mission.world_doc);
    out << "- extent x " << fmt_num(w.extent.x_min) << " to " << fmt_num(w.extent.x_max)
        << " m, y " << fmt_num(w.extent.y_min) << " to " << fmt_num(w.extent.y_max)
        << " m, ceiling " << fmt_num(w.extent.z_ceiling) << " m\n";
    out << "- heightmap grid resolution " << fmt_num(w.resolution) << " m per cell\n";
    out << "- obstacles:";
    if (w.obstacles.empty()) out << " none";
    for (const Obstacle& ob : w.obstacles) out << " " << ob.id;
    out << "\n\n";
  } catch (const Error&) {
    out << "- unavailable\n\n";
  }

  out << "Tools:\n";
  for (const ToolSchema& s : stream_schemas()) out << "- " << s.name << ": " << s.description << "\n";
  out << "\n";

  out << "Mission " << mission.id << ":\n";
  out << "- start " << fmt_vec(mission.start) << ", goal " << fmt_vec(mission.goal)
      << " (meters)\n";
  out << "- reach the goal within " << fmt_num(mission.goal_tolerance) << " m\n";
  out << "- when the agent is at the goal, reply with MISSION COMPLETE and no tool calls\n";

  if (!constraints.empty()) {
    out << "\nConstraints:\n";
    for (const std::string& c : constraints) out << "- " << c << "\n";
  }
  return out.str();
}

}  // namespace uavllm
