// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoalign/env.hpp"
#include "chronoalign/latency.hpp"
#include "chronoalign/llm_bridge.hpp"
#include "chronoalign/policy.hpp"

namespace chronoalign {

enum class ScheduleKind { RoundRobin, SeededShuffle, Explicit };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::RoundRobin;
  std::vector<std::string> explicit_ids;
};

struct PolicySpec {
  std::string kind = "two_phase";
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  std::vector<ActionSpec> actions = default_actions();
  int episodes = 12;
  ScheduleSpec schedule;
  std::uint64_t seed = 0;
  PolicySpec policy;
  ClockConfig clock;
  int replicates = 1;
  /// Most recent summaries fed to the policy; nullopt = unlimited.
  std::optional<int> history_window;
  EndpointConfig endpoint;
  /// Worker threads for replicates; 0 = hardware concurrency.
  int max_parallel = 0;

  void validate() const;
  const ActionSpec& action(const std::string& id) const;
};

/// Seed of replicate r under the config's master seed.
std::uint64_t replicate_seed(std::uint64_t master, int replicate);

/// Action id per episode, length K. seeded_shuffle permutes the balanced
/// multiset (ids cycled to length K) with a Fisher-Yates driven by `seed`.
/// Throws ScheduleError for unknown ids or a wrong-length explicit list.
std::vector<std::string> build_schedule(const ExperimentConfig& cfg, std::uint64_t seed);
inline std::vector<std::string> build_schedule(const ExperimentConfig& cfg) {
  return build_schedule(cfg, cfg.seed);
}

/// N_check * exp((t_confirm - t_true) / t_true). Throws
/// CorruptedRecordError when t_confirm < t_true or the inputs are not a
/// finalized episode (n_check < 1, t_true <= 0).
double regret(int n_check, double t_confirm, double t_true);
double regret(const EpisodeRecord& record);

struct CurvePoint {
  int k = 0;
  double regret = 0.0;
  double time_diff_s = 0.0;
  int n_check = 0;

  bool operator==(const CurvePoint&) const = default;
};

using LearningCurves = std::map<std::string, std::vector<CurvePoint>>;

/// Per-action aggregates. Phase 1 is the action's first (cold-start)
/// episode; phase 2 is every later one.
struct ActionAggregate {
  int episodes = 0;
  double mean_regret = 0.0;
  double phase1_mean_regret = 0.0;
  double phase2_mean_regret = 0.0;
  double single_check_rate = 0.0;
  double final_regret = 0.0;

  bool operator==(const ActionAggregate&) const = default;
};

struct RunResult {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> schedule;
  std::vector<EpisodeRecord> records;
  std::vector<AbortedEpisode> aborted;
  LearningCurves curves;
  std::map<std::string, ActionAggregate> aggregates;

  bool operator==(const RunResult&) const = default;
};

LearningCurves learning_curves(const RunResult& result);
std::map<std::string, ActionAggregate> aggregate(const RunResult& result);

/// Builds the context for episode k from the records of episodes 1..k-1
/// (window applied) and the current episode's log.
PolicyContext build_context(const ExperimentConfig& cfg, const std::vector<EpisodeRecord>& prior,
                            const Episode& episode);

/// One replicate. Every non-LLM run is a pure function of (cfg, replicate).
/// With policy kind "llm", `client` must be non-null.
RunResult run_replicate(const ExperimentConfig& cfg, int replicate, ChatClient* client = nullptr);

/// Replicates run concurrently, merged in replicate order.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, ChatClient* client = nullptr);

}  // namespace chronoalign
