// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/policy.hpp"

#include <algorithm>
#include <cmath>

#include "chronoalign/errors.hpp"
#include "chronoalign/json_fields.hpp"

namespace chronoalign {

namespace {

// Sleep(planned) -> Check -> [Sleep(step) -> Check]* for every waiting policy.
Move plan_then_recover(const PolicyContext& ctx, double planned_s, double step_s) {
  if (ctx.observations.empty()) return Sleep{planned_s};
  switch (ctx.observations.back().observation) {
    case Observation::Slept:
      return Check{};
    case Observation::Pending:
      return Sleep{step_s};
    case Observation::Done:
      break;
  }
  return Check{};
}

double cold_start_wait(const std::string& command, const TwoPhaseConfig& cfg) {
  const auto it = cfg.prior_table.find(command);
  return it != cfg.prior_table.end() ? it->second : cfg.default_wait_s;
}

bool in_unit_interval(double x) { return std::isfinite(x) && x > 0.0 && x <= 1.0; }

class PeriodicPolicy final : public Policy {
 public:
  explicit PeriodicPolicy(double interval_s) : interval_s_(interval_s) {}
  Move decide(const PolicyContext& ctx) const override { return decide_periodic(ctx, interval_s_); }
  std::string name() const override { return "periodic"; }

 private:
  double interval_s_;
};

class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(double wait_s) : wait_s_(wait_s) {}
  Move decide(const PolicyContext& ctx) const override { return decide_static(ctx, wait_s_); }
  std::string name() const override { return "static"; }

 private:
  double wait_s_;
};

class TwoPhasePolicy final : public Policy {
 public:
  explicit TwoPhasePolicy(TwoPhaseConfig cfg) : cfg_(std::move(cfg)) {}
  Move decide(const PolicyContext& ctx) const override { return decide_two_phase(ctx, cfg_); }
  std::string name() const override { return "two_phase"; }

 private:
  TwoPhaseConfig cfg_;
};

class QuantilePolicy final : public Policy {
 public:
  QuantilePolicy(double q, double shrink, TwoPhaseConfig cfg)
      : q_(q), shrink_(shrink), cfg_(std::move(cfg)) {}
  Move decide(const PolicyContext& ctx) const override {
    return decide_quantile(ctx, q_, shrink_, cfg_);
  }
  std::string name() const override { return "quantile"; }

 private:
  double q_;
  double shrink_;
  TwoPhaseConfig cfg_;
};

}  // namespace

HistorySummary summarize(const EpisodeRecord& record, const std::string& command) {
  return {record.k, command, record.total_sleep_s, record.n_check, record.t_confirm};
}

EpisodeTrace trace_of(const EpisodeRecord& record, const std::string& command) {
  return {record.k, command, record.moves};
}

void TwoPhaseConfig::validate() const {
  if (!(reduction >= 0.05 && reduction <= 0.25))
    throw ParameterDomainError("two_phase: reduction must lie in [0.05, 0.25]");
  if (!in_unit_interval(recovery_step_frac))
    throw ParameterDomainError("two_phase: recovery_step_frac must lie in (0, 1]");
  if (!(std::isfinite(failure_margin) && failure_margin >= 1.0))
    throw ParameterDomainError("two_phase: failure_margin must be >= 1");
  if (!(std::isfinite(floor_s) && floor_s > 0.0))
    throw ParameterDomainError("two_phase: floor_s must be > 0");
  if (!(std::isfinite(default_wait_s) && default_wait_s > 0.0))
    throw ParameterDomainError("two_phase: default_wait_s must be > 0");
  for (const auto& [command, wait] : prior_table)
    if (!(std::isfinite(wait) && wait > 0.0))
      throw ParameterDomainError("two_phase: prior for '" + command + "' must be > 0");
}

TwoPhaseConfig TwoPhaseConfig::defaults() {
  TwoPhaseConfig cfg;
  const auto actions = default_actions();
  cfg.prior_table = {
      {actions[0].command, 120.0},
      {actions[1].command, 90.0},
      {actions[2].command, 60.0},
  };
  return cfg;
}

Move decide_periodic(const PolicyContext& ctx, double interval_s) {
  return plan_then_recover(ctx, interval_s, interval_s);
}

Move decide_static(const PolicyContext& ctx, double wait_s) {
  return plan_then_recover(ctx, wait_s, kStaticRecoveryStepS);
}

double plan_two_phase(const PolicyContext& ctx, const TwoPhaseConfig& cfg) {
  const HistorySummary* last = nullptr;
  double guard = 0.0;
  for (const auto& h : ctx.history) {
    if (h.command != ctx.command) continue;
    last = &h;
    if (h.check_count > 1) guard = std::max(guard, h.total_time_s);
  }

  if (last == nullptr) return std::max(cold_start_wait(ctx.command, cfg), cfg.floor_s);

  if (last->check_count > 1) return std::max(cfg.failure_margin * last->total_time_s, cfg.floor_s);

  double wait = std::max(last->executed_sleep_s * (1.0 - cfg.reduction), cfg.floor_s);
  if (cfg.failure_guard) wait = std::max(wait, guard);
  return wait;
}

Move decide_two_phase(const PolicyContext& ctx, const TwoPhaseConfig& cfg) {
  const double planned = plan_two_phase(ctx, cfg);
  return plan_then_recover(ctx, planned, std::max(cfg.recovery_step_frac * planned, cfg.floor_s));
}

std::vector<CensoredInterval> censored_bounds(const std::vector<EpisodeTrace>& detailed_history,
                                              const std::string& command) {
  std::vector<CensoredInterval> out;
  for (const auto& trace : detailed_history) {
    if (trace.command != command) continue;
    double lo = 0.0;
    std::optional<double> hi;
    for (const auto& entry : trace.moves) {
      if (entry.observation == Observation::Pending) lo = entry.clock_s;
      if (entry.observation == Observation::Done) {
        hi = entry.clock_s;
        break;
      }
    }
    if (hi) out.push_back({trace.episode, lo, *hi});
  }
  return out;
}

double empirical_quantile(std::vector<double> samples, double q) {
  if (samples.empty()) throw ParameterDomainError("empirical_quantile: empty sample");
  if (!in_unit_interval(q)) throw ParameterDomainError("empirical_quantile: q must lie in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

double plan_quantile(const PolicyContext& ctx, double q, double shrink,
                     const TwoPhaseConfig& cfg) {
  const auto intervals = censored_bounds(ctx.detailed_history, ctx.command);
  if (intervals.empty()) return std::max(cold_start_wait(ctx.command, cfg), cfg.floor_s);

  std::vector<double> uppers;
  double largest_lower = 0.0;
  for (const auto& iv : intervals) {
    uppers.push_back(iv.hi_s);
    largest_lower = std::max(largest_lower, iv.lo_s);
  }
  const double wait = (1.0 - shrink) * empirical_quantile(std::move(uppers), q);
  return std::max({wait, largest_lower, cfg.floor_s});
}

Move decide_quantile(const PolicyContext& ctx, double q, double shrink,
                     const TwoPhaseConfig& cfg) {
  const double planned = plan_quantile(ctx, q, shrink, cfg);
  return plan_then_recover(ctx, planned, std::max(cfg.recovery_step_frac * planned, cfg.floor_s));
}

TwoPhaseConfig two_phase_from_json(const nlohmann::json& params, const std::string& path) {
  auto cfg = TwoPhaseConfig::defaults();
  if (params.is_null()) return cfg;
  if (!params.is_object()) throw ConfigError(path, "expected an object");
  if (params.contains("prior_table")) {
    const auto& table = params.at("prior_table");
    const auto at = fields::join(path, "prior_table");
    if (!table.is_object()) throw ConfigError(at, "expected an object of command -> seconds");
    for (const auto& [command, wait] : table.items())
      cfg.prior_table[command] = fields::as_number(wait, at + "." + command);
  }
  cfg.default_wait_s = fields::number_or(params, "default_wait_s", path, cfg.default_wait_s);
  cfg.reduction = fields::number_or(params, "reduction", path, cfg.reduction);
  cfg.recovery_step_frac =
      fields::number_or(params, "recovery_step_frac", path, cfg.recovery_step_frac);
  cfg.failure_margin = fields::number_or(params, "failure_margin", path, cfg.failure_margin);
  cfg.floor_s = fields::number_or(params, "floor_s", path, cfg.floor_s);
  cfg.failure_guard = fields::bool_or(params, "failure_guard", path, cfg.failure_guard);
  try {
    cfg.validate();
  } catch (const ParameterDomainError& e) {
    throw ConfigError(path, e.what());
  }
  return cfg;
}

std::unique_ptr<Policy> make_policy(const std::string& kind, const nlohmann::json& params) {
  const std::string path = "policy.params";
  if (kind == "periodic") {
    const double interval = fields::number_or(params, "interval_s", path, 10.0);
    if (!(std::isfinite(interval) && interval > 0.0))
      throw ConfigError(path + ".interval_s", "must be > 0");
    return std::make_unique<PeriodicPolicy>(interval);
  }
  if (kind == "static") {
    const double wait = fields::number_or(params, "wait_s", path, 60.0);
    if (!(std::isfinite(wait) && wait > 0.0)) throw ConfigError(path + ".wait_s", "must be > 0");
    return std::make_unique<StaticPolicy>(wait);
  }
  if (kind == "two_phase") return std::make_unique<TwoPhasePolicy>(two_phase_from_json(params, path));
  if (kind == "quantile") {
    const double q = fields::number_or(params, "q", path, 0.9);
    const double shrink = fields::number_or(params, "shrink", path, 0.0);
    if (!in_unit_interval(q)) throw ConfigError(path + ".q", "must lie in (0, 1]");
    if (!(shrink >= 0.0 && shrink < 1.0)) throw ConfigError(path + ".shrink", "must lie in [0, 1)");
    return std::make_unique<QuantilePolicy>(q, shrink, two_phase_from_json(params, path));
  }
  throw ConfigError("policy.kind", "unknown policy kind '" + kind + "'");
}

}  // namespace chronoalign
