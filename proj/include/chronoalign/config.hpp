// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoalign/experiment.hpp"

// Experiment config files are JSON:
//
//   {
//     "actions":  [{"id", "name", "command", "mean_s", "shape", "lo_s", "hi_s"}],
//     "episodes": 24,
//     "schedule": "round_robin" | "seeded_shuffle" | ["C", "B", ...]
//                 | {"kind": "explicit", "ids": [...]},
//     "seed": 0,
//     "replicates": 1,
//     "history_window": null,
//     "max_parallel": 0,
//     "policy":   {"kind": "periodic|static|two_phase|quantile|llm", "params": {...}},
//     "clock":    {"mode": "virtual|wall", "gen_latency_s": 0, "gen_jitter_s": 0,
//                  "move_budget": 50},
//     "endpoint": {"base_url", "model", "token_env", "timeout_s", "max_retries",
//                  "max_moves", "max_in_flight", "sleep_cap_s"},
//     "output":   {"dir": "out"}
//   }
//
// Every key is optional; omitted keys take the defaults of ExperimentConfig.
namespace chronoalign {

ExperimentConfig config_from_json(const nlohmann::json& j);

/// Parses file text. Syntax errors become ConfigError naming line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& source);

/// Reads and parses a config file. Throws ConfigError (field "path") when
/// the file does not exist.
nlohmann::json load_config_file(const std::filesystem::path& path);

std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
nlohmann::json preset_json(const std::string& name);

}  // namespace chronoalign
