// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/serialize.hpp"

#include "chronoalign/errors.hpp"
#include "chronoalign/json_fields.hpp"

namespace chronoalign {

std::string observation_name(Observation obs) {
  switch (obs) {
    case Observation::Slept:
      return "slept";
    case Observation::Pending:
      return "pending";
    case Observation::Done:
      return "done";
  }
  return "unknown";
}

Observation observation_from_name(const std::string& name) {
  if (name == "slept") return Observation::Slept;
  if (name == "pending") return Observation::Pending;
  if (name == "done") return Observation::Done;
  throw ConfigError("obs", "unknown observation '" + name + "'");
}

nlohmann::json move_to_json(const Move& move) {
  if (const auto* s = std::get_if<Sleep>(&move)) return {{"kind", "sleep"}, {"duration_s", s->duration_s}};
  return {{"kind", "check"}};
}

nlohmann::json log_entry_to_json(const LogEntry& entry) {
  nlohmann::json j = {{"clock_s", entry.clock_s}};
  if (const auto* s = std::get_if<Sleep>(&entry.move)) {
    j["move"] = "sleep";
    j["duration_s"] = s->duration_s;
  } else {
    j["move"] = "check";
  }
  j["obs"] = observation_name(entry.observation);
  return j;
}

LogEntry log_entry_from_json(const nlohmann::json& j) {
  LogEntry entry;
  entry.clock_s = fields::number(j, "clock_s", "moves[]");
  const auto kind = fields::string(j, "move", "moves[]");
  if (kind == "sleep")
    entry.move = Sleep{fields::number(j, "duration_s", "moves[]")};
  else if (kind == "check")
    entry.move = Check{};
  else
    throw ConfigError("moves[].move", "unknown move '" + kind + "'");
  entry.observation = observation_from_name(fields::string(j, "obs", "moves[]"));
  return entry;
}

nlohmann::json record_to_json(const EpisodeRecord& record) {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& m : record.moves) moves.push_back(log_entry_to_json(m));
  return {{"k", record.k},
          {"action_id", record.action_id},
          {"t_true", record.t_true},
          {"t_confirm", record.t_confirm},
          {"n_check", record.n_check},
          {"total_sleep_s", record.total_sleep_s},
          {"moves", std::move(moves)}};
}

EpisodeRecord record_from_json(const nlohmann::json& j) {
  EpisodeRecord r;
  r.k = static_cast<int>(fields::as_integer(fields::require(j, "k", ""), "k"));
  r.action_id = fields::string(j, "action_id", "");
  r.t_true = fields::number(j, "t_true", "");
  r.t_confirm = fields::number(j, "t_confirm", "");
  r.n_check = static_cast<int>(fields::as_integer(fields::require(j, "n_check", ""), "n_check"));
  r.total_sleep_s = fields::number(j, "total_sleep_s", "");
  const auto& moves = fields::require(j, "moves", "");
  if (!moves.is_array()) throw ConfigError("moves", "expected an array");
  for (const auto& m : moves) r.moves.push_back(log_entry_from_json(m));
  return r;
}

nlohmann::json aborted_to_json(const AbortedEpisode& aborted) {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& m : aborted.moves) moves.push_back(log_entry_to_json(m));
  return {{"k", aborted.k},           {"action_id", aborted.action_id},
          {"t_true", aborted.t_true}, {"clock_s", aborted.clock_s},
          {"n_check", aborted.n_check}, {"aborted", true},
          {"moves", std::move(moves)}};
}

nlohmann::json summary_to_json(const HistorySummary& summary) {
  return {{"episode", summary.episode},
          {"command", summary.command},
          {"executed_sleep_s", summary.executed_sleep_s},
          {"check_count", summary.check_count},
          {"total_time_s", summary.total_time_s}};
}

nlohmann::json trace_to_json(const EpisodeTrace& trace) {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& m : trace.moves) moves.push_back(log_entry_to_json(m));
  return {{"episode", trace.episode}, {"command", trace.command}, {"moves", std::move(moves)}};
}

nlohmann::json context_to_json(const PolicyContext& ctx) {
  nlohmann::json observations = nlohmann::json::array();
  for (const auto& m : ctx.observations) observations.push_back(log_entry_to_json(m));
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : ctx.history) history.push_back(summary_to_json(h));
  nlohmann::json detailed = nlohmann::json::array();
  for (const auto& t : ctx.detailed_history) detailed.push_back(trace_to_json(t));
  return {{"command", ctx.command},
          {"k", ctx.k},
          {"elapsed_s", ctx.elapsed_s},
          {"observations", std::move(observations)},
          {"history", std::move(history)},
          {"detailed_history", std::move(detailed)}};
}

const std::set<std::string>& policy_visible_keys() {
  static const std::set<std::string> keys = {
      "command",     "k",     "elapsed_s",        "observations",     "history",
      "detailed_history", "episode", "executed_sleep_s", "check_count", "total_time_s",
      "moves",       "clock_s", "move",           "duration_s",       "obs",
      "kind",
  };
  return keys;
}

namespace {

std::optional<std::string> audit_value(const nlohmann::json& v, double t_true,
                                       const std::string& rendered, const std::string& path) {
  if (v.is_object()) {
    for (const auto& [key, child] : v.items()) {
      const auto at = path.empty() ? key : path + "." + key;
      if (key.find("t_true") != std::string::npos || key.find("true") != std::string::npos)
        return "field '" + at + "' names the hidden completion time";
      if (!policy_visible_keys().contains(key))
        return "field '" + at + "' is outside the policy-visible schema";
      if (auto leak = audit_value(child, t_true, rendered, at)) return leak;
    }
    return std::nullopt;
  }
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (auto leak = audit_value(v[i], t_true, rendered, path + "[" + std::to_string(i) + "]"))
        return leak;
    return std::nullopt;
  }
  if (v.is_number() && v.get<double>() == t_true)
    return "value at '" + path + "' equals the hidden completion time";
  if (v.is_string() && v.get<std::string>().find(rendered) != std::string::npos)
    return "string at '" + path + "' contains the hidden completion time";
  return std::nullopt;
}

}  // namespace

std::optional<std::string> audit_information_barrier(const nlohmann::json& visible, double t_true) {
  const auto rendered = nlohmann::json(t_true).dump();
  if (auto leak = audit_value(visible, t_true, rendered, "")) return leak;
  if (visible.dump().find(rendered) != std::string::npos)
    return "serialized text contains the hidden completion time " + rendered;
  return std::nullopt;
}

}  // namespace chronoalign
