// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "chronoalign/errors.hpp"
#include "chronoalign/json_fields.hpp"

namespace chronoalign {

namespace {

const std::set<std::string> kTopLevelKeys = {
    "actions", "episodes", "schedule", "seed",     "replicates", "history_window",
    "max_parallel", "policy", "clock", "endpoint", "output",     "name",
};

ScheduleSpec schedule_from_json(const nlohmann::json& j) {
  ScheduleSpec s;
  auto read_ids = [](const nlohmann::json& arr, const std::string& path) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < arr.size(); ++i)
      ids.push_back(fields::as_string(arr[i], path + "[" + std::to_string(i) + "]"));
    return ids;
  };
  if (j.is_string()) {
    const auto kind = j.get<std::string>();
    if (kind == "round_robin")
      s.kind = ScheduleKind::RoundRobin;
    else if (kind == "seeded_shuffle")
      s.kind = ScheduleKind::SeededShuffle;
    else
      throw ConfigError("schedule", "unknown schedule '" + kind + "'");
    return s;
  }
  if (j.is_array()) {
    s.kind = ScheduleKind::Explicit;
    s.explicit_ids = read_ids(j, "schedule");
    return s;
  }
  if (j.is_object()) {
    const auto kind = fields::string(j, "kind", "schedule");
    if (kind == "explicit") {
      const auto& ids = fields::require(j, "ids", "schedule");
      if (!ids.is_array()) throw ConfigError("schedule.ids", "expected an array of action ids");
      s.kind = ScheduleKind::Explicit;
      s.explicit_ids = read_ids(ids, "schedule.ids");
      return s;
    }
    return schedule_from_json(nlohmann::json(kind));
  }
  throw ConfigError("schedule", "expected a name, an id list or an object");
}

ClockConfig clock_from_json(const nlohmann::json& j) {
  ClockConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("clock", "expected an object");
  const auto mode = fields::string_or(j, "mode", "clock", "virtual");
  if (mode == "virtual")
    c.mode = ClockMode::Virtual;
  else if (mode == "wall")
    c.mode = ClockMode::Wall;
  else
    throw ConfigError("clock.mode", "expected 'virtual' or 'wall'");
  c.gen_latency.fixed_s = fields::number_or(j, "gen_latency_s", "clock", 0.0);
  c.gen_latency.jitter_s = fields::number_or(j, "gen_jitter_s", "clock", 0.0);
  c.move_budget = static_cast<int>(fields::integer_or(j, "move_budget", "clock", c.move_budget));
  try {
    c.validate();
  } catch (const ParameterDomainError& e) {
    throw ConfigError("clock", e.what());
  }
  return c;
}

// 24-episode regime opening C, B, A, A, followed by a mixed interleaving.
const std::vector<std::string> kOpeningSchedule = {
    "C", "B", "A", "A", "B", "C", "A", "B", "C", "C", "B", "A",
    "A", "B", "C", "A", "C", "B", "A", "C", "B", "A", "A", "B",
};

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kTopLevelKeys.contains(key)) throw ConfigError(key, "unknown config key");

  ExperimentConfig cfg;
  if (j.contains("actions")) cfg.actions = actions_from_json(j.at("actions"), "actions");
  cfg.episodes = static_cast<int>(fields::integer_or(j, "episodes", "", cfg.episodes));
  if (j.contains("schedule")) cfg.schedule = schedule_from_json(j.at("schedule"));
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("seed", "expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.replicates = static_cast<int>(fields::integer_or(j, "replicates", "", cfg.replicates));
  if (j.contains("history_window") && !j.at("history_window").is_null())
    cfg.history_window = static_cast<int>(fields::as_integer(j.at("history_window"), "history_window"));
  cfg.max_parallel = static_cast<int>(fields::integer_or(j, "max_parallel", "", cfg.max_parallel));
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    if (!p.is_object()) throw ConfigError("policy", "expected an object");
    cfg.policy.kind = fields::string(p, "kind", "policy");
    cfg.policy.params = p.contains("params") ? p.at("params") : nlohmann::json::object();
    if (!cfg.policy.params.is_object()) throw ConfigError("policy.params", "expected an object");
  }
  if (j.contains("clock")) cfg.clock = clock_from_json(j.at("clock"));
  if (j.contains("endpoint")) cfg.endpoint = endpoint_from_json(j.at("endpoint"), "endpoint");

  try {
    cfg.validate();
  } catch (const ScheduleError& e) {
    throw ConfigError("schedule", e.what());
  } catch (const ParameterDomainError& e) {
    throw ConfigError("", e.what());
  }
  return cfg;
}

nlohmann::json parse_config_text(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const auto limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    const auto pos = what.find("syntax error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ConfigError("", source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                              ": " + what);
  }
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("path", "config file not found: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config_text(os.str(), path.string());
}

std::vector<std::string> preset_names() {
  return {"main-12", "two-phase-24", "static-60", "periodic-10", "quantile-24", "opening-24", "llm-12"};
}

nlohmann::json preset_json(const std::string& name) {
  if (name == "main-12")
    return {{"episodes", 12}, {"policy", {{"kind", "two_phase"}, {"params", nlohmann::json::object()}}}};
  if (name == "two-phase-24")
    return {{"episodes", 24}, {"policy", {{"kind", "two_phase"}, {"params", nlohmann::json::object()}}}};
  if (name == "static-60")
    return {{"episodes", 24}, {"policy", {{"kind", "static"}, {"params", {{"wait_s", 60.0}}}}}};
  if (name == "periodic-10")
    return {{"episodes", 12}, {"policy", {{"kind", "periodic"}, {"params", {{"interval_s", 10.0}}}}}};
  if (name == "quantile-24")
    return {{"episodes", 24},
            {"policy", {{"kind", "quantile"}, {"params", {{"q", 0.9}, {"shrink", 0.0}}}}}};
  if (name == "opening-24")
    return {{"episodes", 24},
            {"schedule", kOpeningSchedule},
            {"policy", {{"kind", "two_phase"}, {"params", nlohmann::json::object()}}}};
  if (name == "llm-12")
    return {{"episodes", 12}, {"policy", {{"kind", "llm"}, {"params", nlohmann::json::object()}}}};
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

}  // namespace chronoalign
