// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/llm_bridge.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "chronoalign/errors.hpp"
#include "chronoalign/json_fields.hpp"

namespace chronoalign {

namespace {

constexpr std::size_t kMaxCodeLength = 512;

const std::string kUserTemplateHead =
    "[CONTEXT]\n"
    "You are an intelligent agent operating in a Kubernetes environment. You have just executed "
    "the following kubectl command:\n"
    "> > > ";

const std::string kUserTemplateContext =
    "\n"
    "Pay attention! You just edited the cluster and now need to wait for the command to "
    "complete. If you check too early, you'll find the task is still pending which will incur "
    "serious accidents. If you wait too long, you'll incur unnecessary delays. Your goal is to "
    "synchronize with the completion of this task effectively. The task is running in the "
    "background with a variable latency.\n"
    "\n"
    "[HISTORICAL TRAJECTORIES]\n"
    "To act, you MUST analyze the historical trajectories for this specific command and then "
    "use the execute_python_code tool. Provide the code to run as the 'code' parameter.\n";

const std::string kUserTemplateTail =
    "\n"
    "\n"
    "[AVAILABLE ACTIONS]\n"
    "1. Check Status\n"
    "- Description: Check if the target time has elapsed. This is the only way to successfully "
    "finish the task.\n"
    "- Tool Usage: Call execute_python_code with parameter code=\"check()\".\n"
    "- Output: \"Status: PENDING...\" (incomplete) or \"Status: DONE...\" (terminates episode).\n"
    "\n"
    "2. Wait\n"
    "- Description: Wait for a specific duration.\n"
    "- Tool Usage: Call execute_python_code with parameter code=\"import time; "
    "time.sleep(seconds)\".\n"
    "- Output: \"Execution successful. Time has passed.\"\n"
    "\n"
    "[OPTIMIZATION GOAL]\n"
    "Your performance is evaluated by a Regret Score (Lower is better). The score is a "
    "combination of two factors:\n"
    "1. Check Count (High Priority): Every check after the first one adds a large penalty. Your "
    "primary goal is to achieve Check Count = 1.\n"
    "2. Wait Precision: The time you wait should be as close as possible to the true (hidden) "
    "completion time. Waiting excessively long will also increase your Regret Score.\n"
    "\n"
    "[TWO-PHASE STRATEGY]\n"
    "Follow this procedure to make your decision:\n"
    "Phase 1: Establish a Safe Baseline\n"
    "- If this is the first time you see this specific command, you have no history. Make a "
    "conservative first guess based on your semantic prior knowledge. A long wait is better "
    "than failing. Goal: get the first data point with Check Count = 1.\n"
    "\n"
    "Phase 2: Cautious Optimization\n"
    "- Once you consistently achieve Check Count = 1, analyze the history for the current "
    "command type only.\n"
    "- Find your last successful wait time (Last_Wait).\n"
    "- Propose a new wait time that is slightly less than Last_Wait (e.g., 10-20% reduction) "
    "but not so low that you risk failing.\n"
    "\n"
    "[SYSTEM INSTRUCTIONS]\n"
    "At each step, you must decide whether to wait or check and call the execute_python_code "
    "tool accordingly. Use wait to approach the target time, and check only when you are "
    "confident the time has elapsed.";

const std::regex& check_pattern() {
  static const std::regex re(R"(^\s*check\s*\(\s*\)\s*$)");
  return re;
}

const std::regex& sleep_pattern() {
  static const std::regex re(
      R"(^\s*(?:import\s+time(?:\s*;\s*|[ \t]*\r?\n\s*))?time\s*\.\s*sleep\s*\(\s*([0-9]+(?:\.[0-9]*)?|\.[0-9]+)\s*\)\s*$)");
  return re;
}

std::string to_fixed_shortest(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

}  // namespace

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ParameterDomainError("endpoint: base_url must not be empty");
  if (!(std::isfinite(timeout_s) && timeout_s > 0.0))
    throw ParameterDomainError("endpoint: timeout_s must be > 0");
  if (max_retries < 0) throw ParameterDomainError("endpoint: max_retries must be >= 0");
  if (max_moves < 2) throw ParameterDomainError("endpoint: max_moves must be >= 2");
  if (max_in_flight < 1) throw ParameterDomainError("endpoint: max_in_flight must be >= 1");
  if (!(std::isfinite(sleep_cap_s) && sleep_cap_s > 0.0))
    throw ParameterDomainError("endpoint: sleep_cap_s must be > 0");
}

EndpointConfig endpoint_from_json(const nlohmann::json& j, const std::string& path) {
  EndpointConfig e;
  if (j.is_null()) return e;
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  e.base_url = fields::string_or(j, "base_url", path, e.base_url);
  e.model = fields::string_or(j, "model", path, e.model);
  e.token_env = fields::string_or(j, "token_env", path, e.token_env);
  e.timeout_s = fields::number_or(j, "timeout_s", path, e.timeout_s);
  e.max_retries = static_cast<int>(fields::integer_or(j, "max_retries", path, e.max_retries));
  e.max_moves = static_cast<int>(fields::integer_or(j, "max_moves", path, e.max_moves));
  e.max_in_flight = static_cast<int>(fields::integer_or(j, "max_in_flight", path, e.max_in_flight));
  e.sleep_cap_s = fields::number_or(j, "sleep_cap_s", path, e.sleep_cap_s);
  try {
    e.validate();
  } catch (const ParameterDomainError& err) {
    throw ConfigError(path, err.what());
  }
  return e;
}

std::string role_name(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
    case Role::Tool:
      return "tool";
  }
  return "user";
}

ParsedAction parse_action(std::string_view code, double sleep_cap_s) {
  if (code.size() > kMaxCodeLength) return InvalidAction{"action too long"};
  const std::string text(code);
  if (std::regex_match(text, check_pattern())) return Check{};

  std::smatch m;
  if (!std::regex_match(text, m, sleep_pattern())) return InvalidAction{"unrecognized action"};

  const std::string literal = m[1].str();
  double seconds = 0.0;
  const auto res = std::from_chars(literal.data(), literal.data() + literal.size(), seconds);
  if (res.ec == std::errc::result_out_of_range || !std::isfinite(seconds))
    return InvalidAction{"sleep duration exceeds cap of " + format_seconds(sleep_cap_s) + "s"};
  if (res.ec != std::errc{}) return InvalidAction{"unrecognized action"};
  if (seconds <= 0.0) return InvalidAction{"sleep duration must be positive"};
  if (seconds > sleep_cap_s)
    return InvalidAction{"sleep duration exceeds cap of " + format_seconds(sleep_cap_s) + "s"};
  return Sleep{seconds};
}

std::string format_move(const Move& move) {
  if (const auto* s = std::get_if<Sleep>(&move))
    return "import time; time.sleep(" + to_fixed_shortest(s->duration_s) + ")";
  return "check()";
}

std::string format_seconds(double seconds) {
  const double rounded = std::round(seconds * 100.0) / 100.0;
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof buf, rounded, std::chars_format::fixed, 2);
  std::string s(buf, res.ptr);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

std::string render_history(const std::vector<HistorySummary>& history,
                           std::string_view empty_marker) {
  if (history.empty()) return std::string(empty_marker);
  std::ostringstream os;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    if (i > 0) os << '\n';
    os << "Episode " << h.episode << ": Command = '" << h.command
       << "', Your Executed Sleep Time = " << format_seconds(h.executed_sleep_s)
       << "s, Check Count = " << h.check_count;
  }
  return os.str();
}

std::string render_user_prompt(const std::string& command,
                               const std::vector<HistorySummary>& history,
                               std::string_view empty_marker) {
  return kUserTemplateHead + command + kUserTemplateContext +
         render_history(history, empty_marker) + kUserTemplateTail;
}

const std::string& system_prompt() {
  static const std::string text =
      "You are a helpful AI agent. To solve the task, you must use the execute_python_code "
      "tool. Do not write code in your response directly.";
  return text;
}

ChatTranscript render_prompt(const std::string& command, const std::vector<HistorySummary>& history,
                             std::string_view empty_marker) {
  ChatTranscript t;
  t.messages.push_back({Role::System, system_prompt(), std::nullopt, ""});
  t.messages.push_back({Role::User, render_user_prompt(command, history, empty_marker),
                        std::nullopt, ""});
  return t;
}

nlohmann::json tool_schema() {
  return {{"type", "function"},
          {"function",
           {{"name", std::string(kToolName)},
            {"description", "Execute Python code in the agent environment."},
            {"parameters",
             {{"type", "object"},
              {"properties",
               {{"code", {{"type", "string"}, {"description", "The Python code to run."}}}}},
              {"required", {"code"}}}}}}};
}

nlohmann::json message_to_json(const ChatMessage& message) {
  nlohmann::json j = {{"role", role_name(message.role)}};
  if (message.role == Role::Assistant && message.tool_call) {
    j["content"] = message.content.empty() ? nlohmann::json(nullptr) : nlohmann::json(message.content);
    j["tool_calls"] = nlohmann::json::array({{{"id", message.tool_call->id},
                                              {"type", "function"},
                                              {"function",
                                               {{"name", message.tool_call->name},
                                                {"arguments", message.tool_call->arguments}}}}});
  } else {
    j["content"] = message.content;
  }
  if (message.role == Role::Tool) j["tool_call_id"] = message.tool_call_id;
  return j;
}

nlohmann::json build_request(const EndpointConfig& endpoint, const ChatTranscript& transcript) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : transcript.messages) messages.push_back(message_to_json(m));
  return {{"model", endpoint.model},
          {"messages", std::move(messages)},
          {"tools", nlohmann::json::array({tool_schema()})},
          {"tool_choice", "auto"}};
}

AssistantTurn parse_response(const nlohmann::json& response) {
  if (!response.is_object() || !response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty())
    throw EndpointError("response has no choices");
  const auto& choice = response["choices"][0];
  if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object())
    throw EndpointError("response choice has no message");
  const auto& msg = choice["message"];

  AssistantTurn turn;
  if (msg.contains("content") && msg["content"].is_string()) turn.content = msg["content"];

  auto read_call = [](const nlohmann::json& fn, std::string id) -> std::optional<ToolCall> {
    if (!fn.is_object()) return std::nullopt;
    ToolCall call;
    call.id = std::move(id);
    call.name = fn.value("name", "");
    const auto& args = fn.contains("arguments") ? fn["arguments"] : nlohmann::json();
    call.arguments = args.is_string() ? args.get<std::string>() : args.dump();
    return call;
  };

  if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
    const auto& tc = msg["tool_calls"][0];
    if (tc.is_object() && tc.contains("function"))
      turn.tool_call = read_call(tc["function"], tc.value("id", "call_0"));
  } else if (msg.contains("function_call")) {
    turn.tool_call = read_call(msg["function_call"], "call_0");
  }
  return turn;
}

ParsedAction action_from_tool_call(const ToolCall& call, double sleep_cap_s) {
  if (call.name != kToolName) return InvalidAction{"unknown tool '" + call.name + "'"};
  const auto args = nlohmann::json::parse(call.arguments, nullptr, false);
  if (args.is_discarded() || !args.is_object())
    return InvalidAction{"tool arguments are not a JSON object"};
  if (!args.contains("code") || !args["code"].is_string())
    return InvalidAction{"missing 'code' string argument"};
  return parse_action(args["code"].get<std::string>(), sleep_cap_s);
}

HttpChatClient::HttpChatClient(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {
  endpoint_.validate();
  const auto& url = endpoint_.base_url;
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  origin_ = path_start == std::string::npos ? url : url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

nlohmann::json HttpChatClient::complete(const nlohmann::json& request) {
  httplib::Client client(origin_);
  const auto timeout = std::chrono::duration<double>(endpoint_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!endpoint_.token_env.empty()) {
    if (const char* token = std::getenv(endpoint_.token_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const auto body = request.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(100) * (1 << std::min(attempt, 6)));
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200)
      throw EndpointError("HTTP " + std::to_string(res->status) + " from " + origin_ + path_ +
                          ": " + res->body);
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw EndpointError("endpoint returned malformed JSON");
    return parsed;
  }
  throw EndpointError(origin_ + path_ + ": giving up after " +
                      std::to_string(endpoint_.max_retries + 1) + " attempts; " + last_error);
}

LlmEpisodeResult run_llm_episode(ChatClient& client, const EndpointConfig& endpoint,
                                 Episode& episode, const std::vector<HistorySummary>& history) {
  LlmEpisodeResult result;
  auto& transcript = result.transcript;
  transcript = render_prompt(episode.action().command, history);

  int turns = 0;
  int consecutive_invalid = 0;
  while (episode.status() == EpisodeStatus::Running) {
    if (turns >= endpoint.max_moves) {
      episode.abort();
      throw BudgetExceededError("episode " + std::to_string(episode.index()) + ": model used " +
                                std::to_string(turns) + " turns without reaching DONE");
    }
    const auto request = build_request(endpoint, transcript);
    const auto started = std::chrono::steady_clock::now();
    const auto response = client.complete(request);
    const std::chrono::duration<double> latency = std::chrono::steady_clock::now() - started;
    ++turns;

    const auto turn = parse_response(response);
    ParsedAction action = InvalidAction{"no tool call in response"};
    if (turn.tool_call) {
      transcript.messages.push_back({Role::Assistant, turn.content, turn.tool_call, ""});
      action = action_from_tool_call(*turn.tool_call, endpoint.sleep_cap_s);
    } else {
      transcript.messages.push_back({Role::Assistant, turn.content, std::nullopt, ""});
    }

    auto reply = [&](std::string text) {
      if (turn.tool_call)
        transcript.messages.push_back({Role::Tool, std::move(text), std::nullopt, turn.tool_call->id});
      else
        transcript.messages.push_back({Role::User, std::move(text), std::nullopt, ""});
    };

    if (const auto* invalid = std::get_if<InvalidAction>(&action)) {
      ++result.invalid_actions;
      reply("Invalid action: " + invalid->reason);
      if (++consecutive_invalid > endpoint.max_retries) {
        episode.abort();
        throw EndpointError("episode " + std::to_string(episode.index()) + ": " +
                            std::to_string(consecutive_invalid) +
                            " consecutive invalid actions, last: " + invalid->reason);
      }
      continue;
    }
    consecutive_invalid = 0;

    const Move move = std::holds_alternative<Check>(action) ? Move{Check{}}
                                                            : Move{std::get<Sleep>(action)};
    switch (episode.step(move, latency.count())) {
      case Observation::Slept:
        reply(std::string(kSleptResult));
        break;
      case Observation::Pending:
        reply(std::string(kPendingResult));
        break;
      case Observation::Done:
        reply(std::string(kDoneResult));
        break;
    }
  }
  result.record = episode.finish();
  return result;
}

EpisodeRecord run_llm_episode(ChatClient& client, const EndpointConfig& endpoint,
                              const ActionSpec& spec, std::uint64_t seed,
                              const std::vector<HistorySummary>& history,
                              const ClockConfig& clock, int k) {
  auto episode = Episode::start(spec, seed, clock, k);
  return run_llm_episode(client, endpoint, episode, history).record;
}

}  // namespace chronoalign
