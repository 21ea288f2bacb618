// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoalign/env.hpp"

namespace chronoalign {

/// The per-episode digest an agent sees across episodes.
struct HistorySummary {
  int episode = 0;
  std::string command;
  double executed_sleep_s = 0.0;
  int check_count = 0;
  double total_time_s = 0.0;

  bool operator==(const HistorySummary&) const = default;
};

/// A prior episode's move log with the hidden completion time removed.
struct EpisodeTrace {
  int episode = 0;
  std::string command;
  std::vector<LogEntry> moves;

  bool operator==(const EpisodeTrace&) const = default;
};

/// Everything a policy may look at. Built only from observable data: there
/// is no field through which a completion time could travel.
struct PolicyContext {
  std::string command;
  int k = 1;
  double elapsed_s = 0.0;
  std::vector<LogEntry> observations;
  std::vector<HistorySummary> history;
  std::vector<EpisodeTrace> detailed_history;
};

HistorySummary summarize(const EpisodeRecord& record, const std::string& command);
EpisodeTrace trace_of(const EpisodeRecord& record, const std::string& command);

struct TwoPhaseConfig {
  std::map<std::string, double> prior_table;
  double default_wait_s = 120.0;
  double reduction = 0.10;
  double recovery_step_frac = 0.25;
  double failure_margin = 1.05;
  double floor_s = 1.0;
  /// Once a command has failed, never plan below that episode's total time.
  bool failure_guard = true;

  void validate() const;

  /// Priors keyed by the default kubectl commands: 120 / 90 / 60 s.
  static TwoPhaseConfig defaults();
};

/// Lower/upper bounds on one past episode's completion time:
/// t_true is in (lo_s, hi_s].
struct CensoredInterval {
  int episode = 0;
  double lo_s = 0.0;
  double hi_s = 0.0;
};

Move decide_periodic(const PolicyContext& ctx, double interval_s);

/// Recovery step after a PENDING check.
inline constexpr double kStaticRecoveryStepS = 5.0;

Move decide_static(const PolicyContext& ctx, double wait_s);

/// The wait the two-phase strategy plans for this episode (pure in ctx).
double plan_two_phase(const PolicyContext& ctx, const TwoPhaseConfig& cfg);
Move decide_two_phase(const PolicyContext& ctx, const TwoPhaseConfig& cfg);

std::vector<CensoredInterval> censored_bounds(const std::vector<EpisodeTrace>& detailed_history,
                                              const std::string& command);

/// Inverse empirical CDF: the smallest sample x with F(x) >= q, q in (0, 1].
double empirical_quantile(std::vector<double> samples, double q);

double plan_quantile(const PolicyContext& ctx, double q, double shrink,
                     const TwoPhaseConfig& cfg);
Move decide_quantile(const PolicyContext& ctx, double q, double shrink,
                     const TwoPhaseConfig& cfg = TwoPhaseConfig::defaults());

/// Common decision interface for the reference agents.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Move decide(const PolicyContext& ctx) const = 0;
  virtual std::string name() const = 0;
};

/// `kind` is periodic | static | two_phase | quantile. `params` keys:
/// periodic {interval_s}; static {wait_s}; two_phase {prior_table,
/// default_wait_s, reduction, recovery_step_frac, failure_margin, floor_s,
/// failure_guard}; quantile {q, shrink} plus the two_phase keys.
std::unique_ptr<Policy> make_policy(const std::string& kind, const nlohmann::json& params);

TwoPhaseConfig two_phase_from_json(const nlohmann::json& params, const std::string& path);

}  // namespace chronoalign
