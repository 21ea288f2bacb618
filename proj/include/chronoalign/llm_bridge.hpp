// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chronoalign/env.hpp"
#include "chronoalign/policy.hpp"

namespace chronoalign {

inline constexpr std::string_view kToolName = "execute_python_code";
inline constexpr std::string_view kSleptResult = "Execution successful. Time has passed.";
inline constexpr std::string_view kPendingResult = "Status: PENDING...";
inline constexpr std::string_view kDoneResult = "Status: DONE...";
inline constexpr std::string_view kNoHistoryMarker = "(no prior episodes)";
inline constexpr double kDefaultSleepCapS = 600.0;

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string model = "gpt-4o-mini";
  /// Name of the environment variable holding the bearer token. Unset or
  /// empty variable means no Authorization header.
  std::string token_env = "OPENAI_API_KEY";
  double timeout_s = 120.0;
  int max_retries = 3;
  int max_moves = 50;
  int max_in_flight = 1;
  double sleep_cap_s = kDefaultSleepCapS;

  void validate() const;
};

EndpointConfig endpoint_from_json(const nlohmann::json& j, const std::string& path = "endpoint");

enum class Role { System, User, Assistant, Tool };

std::string role_name(Role role);

struct ToolCall {
  std::string id;
  std::string name;
  /// Raw JSON-encoded arguments string, as the wire carries it.
  std::string arguments;

  bool operator==(const ToolCall&) const = default;
};

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  std::optional<ToolCall> tool_call;
  /// Set on Role::Tool messages: id of the call being answered.
  std::string tool_call_id;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatTranscript {
  std::vector<ChatMessage> messages;

  bool operator==(const ChatTranscript&) const = default;
};

struct InvalidAction {
  std::string reason;
  bool operator==(const InvalidAction&) const = default;
};

using ParsedAction = std::variant<Check, Sleep, InvalidAction>;

/// Restricted action grammar; nothing is ever executed. Accepted, modulo
/// whitespace: `check()`, `time.sleep(N)`, `import time; time.sleep(N)`
/// (or the same on two lines), N a non-negative decimal literal.
ParsedAction parse_action(std::string_view code, double sleep_cap_s = kDefaultSleepCapS);

/// Inverse of parse_action for the moves reference policies emit.
std::string format_move(const Move& move);

/// Seconds as the history line shows them: at most two decimals, no
/// trailing zeros ("120", "97.2").
std::string format_seconds(double seconds);

std::string render_history(const std::vector<HistorySummary>& history,
                           std::string_view empty_marker = kNoHistoryMarker);

std::string render_user_prompt(const std::string& command,
                               const std::vector<HistorySummary>& history,
                               std::string_view empty_marker = kNoHistoryMarker);

/// System + user messages for one episode.
ChatTranscript render_prompt(const std::string& command, const std::vector<HistorySummary>& history,
                             std::string_view empty_marker = kNoHistoryMarker);

const std::string& system_prompt();

nlohmann::json tool_schema();
nlohmann::json message_to_json(const ChatMessage& message);
nlohmann::json build_request(const EndpointConfig& endpoint, const ChatTranscript& transcript);

/// What the assistant said in one response.
struct AssistantTurn {
  std::string content;
  std::optional<ToolCall> tool_call;
};

/// Reads choices[0].message of a chat-completions response. Throws
/// EndpointError when the payload has no such message.
AssistantTurn parse_response(const nlohmann::json& response);

/// Maps a tool call to an action: wrong tool name, bad arguments JSON or a
/// missing `code` string all become InvalidAction.
ParsedAction action_from_tool_call(const ToolCall& call, double sleep_cap_s);

/// Transport seam between the episode driver and an endpoint.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual nlohmann::json complete(const nlohmann::json& request) = 0;
};

/// POST <base>/chat/completions over HTTP(S), retrying transport failures
/// and 5xx replies up to max_retries times.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(EndpointConfig endpoint);
  nlohmann::json complete(const nlohmann::json& request) override;

 private:
  EndpointConfig endpoint_;
  std::string origin_;
  std::string path_;
};

/// Outcome of one driven episode plus the full conversation.
struct LlmEpisodeResult {
  EpisodeRecord record;
  ChatTranscript transcript;
  int invalid_actions = 0;
};

/// Drives `episode` to DONE through the model. Invalid actions are answered
/// with "Invalid action: <reason>" and re-asked; more than max_retries in a
/// row aborts the episode with EndpointError. Running past max_moves model
/// turns aborts with BudgetExceededError.
LlmEpisodeResult run_llm_episode(ChatClient& client, const EndpointConfig& endpoint,
                                 Episode& episode, const std::vector<HistorySummary>& history);

EpisodeRecord run_llm_episode(ChatClient& client, const EndpointConfig& endpoint,
                              const ActionSpec& spec, std::uint64_t seed,
                              const std::vector<HistorySummary>& history,
                              const ClockConfig& clock, int k = 1);

}  // namespace chronoalign
