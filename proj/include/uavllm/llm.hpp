#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavllm/mission_spec.hpp"
#include "uavllm/streams.hpp"

namespace uavllm {

struct ModelConfig {
  std::string model_name = "gpt-4o-mini";
  int max_tokens = 1024;
  double temperature = 0.0;
  std::string system_prompt;
  /// Sampling seed forwarded to providers that accept one.
  std::optional<std::int64_t> seed;
  /// Throws kInvalidArguments when max_tokens <= 0 or temperature is outside
  /// [0, 2].
  void validate() const;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

enum class Role { kSystem, kUser, kAssistant, kTool };

std::string_view role_name(Role role);
Role parse_role(std::string_view name);

struct ToolCall {
  std::string id;
  std::string name;
  nlohmann::json arguments;
  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct ChatTurn {
  Role role = Role::kUser;
  std::string content;
  std::vector<ToolCall> tool_calls;    // assistant only
  std::optional<std::string> tool_call_id;  // tool only
  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

/// Chat-completions message shape; tool-call arguments are kept as JSON
/// values, not strings.
nlohmann::json turn_to_json(const ChatTurn& turn);
ChatTurn turn_from_json(const nlohmann::json& j);
nlohmann::json transcript_to_json(const std::vector<ChatTurn>& transcript);

struct Price {
  double input_per_1k = 0.0;   // currency per 1000 prompt tokens
  double output_per_1k = 0.0;  // currency per 1000 completion tokens
};

using PriceTable = std::map<std::string, Price>;

/// {"schema":"uav-prices/1","models":{"name":{"input_per_1k":..,"output_per_1k":..}}}
PriceTable price_table_from_json(const nlohmann::json& j);
PriceTable load_price_table(const std::string& path);

struct ApiBudget {
  int call_limit = 10;
  int calls_used = 0;
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
  PriceTable price_table;
  double accrued_cost = 0.0;
  bool exhausted() const { return calls_used >= call_limit; }
};

nlohmann::json budget_to_json(const ApiBudget& budget);

/// Adds the tokens and their cost. Throws kUnknownModel.
ApiBudget charge(ApiBudget budget, const std::string& model_name, long long prompt_tokens,
                 long long completion_tokens);

/// Rough token count used when a provider reports no usage: ceil(chars / 4).
long long estimate_tokens(std::string_view text);

struct Usage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
};

struct ProviderReply {
  ChatTurn turn;
  std::optional<Usage> usage;
};

/// One model service. Implementations return exactly one assistant turn per
/// call and signal transport failures with kProviderUnavailable.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply respond(const std::vector<ChatTurn>& history,
                                const std::vector<ToolSchema>& tools,
                                const ModelConfig& config) = 0;
  virtual std::string name() const = 0;
};

/// Conversation predicate of a scripted responder; every present field must
/// hold.
struct ResponderMatch {
  std::optional<int> call_index;           // provider invocations so far
  std::optional<Role> last_role;           // role of the newest turn
  std::optional<std::string> contains;     // substring of the newest turn
  std::optional<std::string> tool_result_of;  // newest turn answers this stream
  std::optional<bool> tool_error;          // newest tool result is an error
};

struct Responder {
  ResponderMatch match;
  ChatTurn reply;  // role is always assistant
  std::optional<Usage> usage;
  bool repeat = false;       // may answer more than once
  bool malformed = false;    // deliberately fails schema validation
};

/// Deterministic stand-in for a model service: the first unused responder
/// whose predicate matches the conversation answers it.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(std::vector<Responder> responders, std::string label = "scripted");
  static ScriptedProvider from_json(const nlohmann::json& doc);
  static ScriptedProvider load_file(const std::string& path);

  ProviderReply respond(const std::vector<ChatTurn>& history, const std::vector<ToolSchema>& tools,
                        const ModelConfig& config) override;
  std::string name() const override { return label_; }

  const std::vector<Responder>& responders() const { return responders_; }
  /// Tool calls of responders not flagged malformed that fail the schemas.
  std::vector<std::string> schema_problems() const;

 private:
  std::vector<Responder> responders_;
  std::string label_;
  std::set<std::size_t> used_;
  int calls_ = 0;
};

struct HttpProviderConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "UAVLLM_API_KEY";
  int timeout_seconds = 60;
};

/// Chat-completions client over HTTP(S) with bearer-token auth read from an
/// environment variable.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderConfig config);

  ProviderReply respond(const std::vector<ChatTurn>& history, const std::vector<ToolSchema>& tools,
                        const ModelConfig& config) override;
  std::string name() const override { return "http"; }

  static nlohmann::json build_request(const std::vector<ChatTurn>& history,
                                      const std::vector<ToolSchema>& tools,
                                      const ModelConfig& config);
  /// Throws kProviderUnavailable for bodies without a message and
  /// kMalformedToolCall for unparsable tool arguments.
  static ProviderReply parse_response(const nlohmann::json& body);

 private:
  HttpProviderConfig config_;
};

/// One model round trip. Fails with kBudgetExceeded before touching the
/// provider when the budget is spent, and kUnknownModel when the model is not
/// priced. On success `budget` gains exactly one call plus the reported (or
/// estimated) tokens and their cost; the charge stands even when the reply is
/// then rejected with kMalformedToolCall (first offending call, field named).
ChatTurn complete(const std::vector<ChatTurn>& history, const std::vector<ToolSchema>& tools,
                  const ModelConfig& config, ApiBudget& budget, Provider& provider);

/// Deterministic prompt: role statement, world summary, tool inventory,
/// mission endpoints, then each constraint verbatim (no section when empty).
std::string build_system_prompt(const MissionSpec& mission,
                                const std::vector<std::string>& constraints);

}  // namespace uavllm
