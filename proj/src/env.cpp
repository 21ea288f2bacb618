// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/env.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "chronoalign/errors.hpp"

namespace chronoalign {

namespace {

// Independent stream for per-move latency jitter, so enabling jitter never
// perturbs the hidden completion time drawn from the same episode seed.
constexpr std::uint64_t kLatencyStream = 0x6c6174656e6379ULL;

}  // namespace

void ClockConfig::validate() const {
  if (!(std::isfinite(gen_latency.fixed_s) && gen_latency.fixed_s >= 0.0) ||
      !(std::isfinite(gen_latency.jitter_s) && gen_latency.jitter_s >= 0.0))
    throw ParameterDomainError("clock: generation latency must be >= 0");
  if (move_budget < 2) throw ParameterDomainError("clock: move_budget must be >= 2");
}

Move make_sleep(double duration_s) {
  if (!std::isfinite(duration_s) || duration_s <= 0.0)
    throw ParameterDomainError("sleep duration must be positive and finite");
  return Sleep{duration_s};
}

bool is_sleep(const Move& m) { return std::holds_alternative<Sleep>(m); }
bool is_check(const Move& m) { return std::holds_alternative<Check>(m); }

Episode::Episode(ActionSpec action, double t_true, const ClockConfig& clock, std::uint64_t seed,
                 int k)
    : action_(std::move(action)),
      t_true_(t_true),
      clock_(clock),
      latency_rng_(derive_seed(seed, kLatencyStream)),
      k_(k) {}

Episode Episode::start(const ActionSpec& spec, std::uint64_t seed, const ClockConfig& clock,
                       int k) {
  clock.validate();
  LatencySampler sampler(spec, seed);
  const double t_true = sampler.sample();
  return Episode(spec, t_true, clock, seed, k);
}

double Episode::charge_latency(std::optional<double> measured) {
  if (clock_.mode == ClockMode::Wall && measured) return std::max(0.0, *measured);
  double charge = clock_.gen_latency.fixed_s;
  if (clock_.gen_latency.jitter_s > 0.0)
    charge += clock_.gen_latency.jitter_s * latency_rng_.uniform();
  return charge;
}

Observation Episode::step(const Move& move, std::optional<double> measured_gen_latency_s) {
  if (status_ != EpisodeStatus::Running)
    throw EpisodeClosedError("episode " + std::to_string(k_) + " is no longer running");
  if (static_cast<int>(log_.size()) >= clock_.move_budget) {
    status_ = EpisodeStatus::Aborted;
    throw BudgetExceededError("episode " + std::to_string(k_) + " exceeded its budget of " +
                              std::to_string(clock_.move_budget) + " moves");
  }
  if (const auto* s = std::get_if<Sleep>(&move)) {
    if (!std::isfinite(s->duration_s) || s->duration_s <= 0.0)
      throw ParameterDomainError("sleep duration must be positive and finite");
  }

  clock_s_ += charge_latency(measured_gen_latency_s);

  Observation obs;
  if (const auto* s = std::get_if<Sleep>(&move)) {
    if (clock_.mode == ClockMode::Wall)
      std::this_thread::sleep_for(std::chrono::duration<double>(s->duration_s));
    clock_s_ += s->duration_s;
    total_sleep_s_ += s->duration_s;
    obs = Observation::Slept;
  } else {
    ++n_check_;
    if (clock_s_ >= t_true_) {
      obs = Observation::Done;
      status_ = EpisodeStatus::Done;
      t_confirm_ = clock_s_;
    } else {
      obs = Observation::Pending;
    }
  }
  log_.push_back({clock_s_, move, obs});
  return obs;
}

void Episode::abort() {
  if (status_ != EpisodeStatus::Running)
    throw EpisodeClosedError("episode " + std::to_string(k_) + " is no longer running");
  status_ = EpisodeStatus::Aborted;
}

EpisodeRecord Episode::finish() const {
  if (status_ != EpisodeStatus::Done)
    throw NotFinalizableError("episode " + std::to_string(k_) + " has not reached DONE");
  return {k_, action_.id, t_true_, t_confirm_, n_check_, total_sleep_s_, log_};
}

AbortedEpisode Episode::aborted_summary() const {
  if (status_ != EpisodeStatus::Aborted)
    throw NotFinalizableError("episode " + std::to_string(k_) + " was not aborted");
  return {k_, action_.id, t_true_, clock_s_, n_check_, log_};
}

}  // namespace chronoalign
