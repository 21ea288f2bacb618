// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chronoalign/latency.hpp"
#include "chronoalign/rng.hpp"

namespace chronoalign {

enum class ClockMode { Virtual, Wall };

/// Generation latency charged before every move: fixed_s + U[0, jitter_s).
struct GenLatency {
  double fixed_s = 0.0;
  double jitter_s = 0.0;
};

struct ClockConfig {
  ClockMode mode = ClockMode::Virtual;
  GenLatency gen_latency;
  int move_budget = 50;

  void validate() const;
};

struct Sleep {
  double duration_s = 0.0;
  bool operator==(const Sleep&) const = default;
};

struct Check {
  bool operator==(const Check&) const = default;
};

/// Active wait or status check. Build sleeps through make_sleep so the
/// duration is validated.
using Move = std::variant<Sleep, Check>;

Move make_sleep(double duration_s);
bool is_sleep(const Move& m);
bool is_check(const Move& m);

enum class Observation { Slept, Pending, Done };

/// One resolved move. `clock_s` is the clock at which the observation was
/// made, i.e. after generation latency and (for Sleep) after the wait.
struct LogEntry {
  double clock_s = 0.0;
  Move move;
  Observation observation = Observation::Slept;

  bool operator==(const LogEntry&) const = default;
};

enum class EpisodeStatus { Running, Done, Aborted };

/// Finalized, scoreable outcome of an episode.
struct EpisodeRecord {
  int k = 0;
  std::string action_id;
  double t_true = 0.0;
  double t_confirm = 0.0;
  int n_check = 0;
  double total_sleep_s = 0.0;
  std::vector<LogEntry> moves;

  bool operator==(const EpisodeRecord&) const = default;
};

/// Diagnostic digest of an episode that hit its move budget.
struct AbortedEpisode {
  int k = 0;
  std::string action_id;
  double t_true = 0.0;
  double clock_s = 0.0;
  int n_check = 0;
  std::vector<LogEntry> moves;

  bool operator==(const AbortedEpisode&) const = default;
};

/// A live episode. The hidden completion time never leaves this object
/// except through finish() / aborted_summary(), which feed scoring only.
class Episode {
 public:
  /// Samples the hidden completion time from a truncated-Gamma sampler
  /// seeded with `seed`. Propagates InfeasibleBoundsError.
  static Episode start(const ActionSpec& spec, std::uint64_t seed, const ClockConfig& clock,
                       int k = 1);

  /// Charges generation latency, then applies the move. In wall mode a
  /// caller-measured latency replaces the configured one.
  ///
  /// Throws EpisodeClosedError when not running, BudgetExceededError
  /// (and aborts) when the move budget is already spent.
  Observation step(const Move& move, std::optional<double> measured_gen_latency_s = {});

  /// Marks a running episode aborted (used by drivers that give up).
  void abort();

  /// Throws NotFinalizableError unless the episode ended with Done.
  EpisodeRecord finish() const;

  /// Throws NotFinalizableError unless the episode was aborted.
  AbortedEpisode aborted_summary() const;

  const ActionSpec& action() const { return action_; }
  int index() const { return k_; }
  double elapsed_s() const { return clock_s_; }
  int n_check() const { return n_check_; }
  EpisodeStatus status() const { return status_; }
  const std::vector<LogEntry>& log() const { return log_; }

 private:
  Episode(ActionSpec action, double t_true, const ClockConfig& clock, std::uint64_t seed, int k);

  double charge_latency(std::optional<double> measured);

  ActionSpec action_;
  double t_true_;
  ClockConfig clock_;
  Rng latency_rng_;
  int k_;
  double clock_s_ = 0.0;
  double total_sleep_s_ = 0.0;
  int n_check_ = 0;
  double t_confirm_ = 0.0;
  EpisodeStatus status_ = EpisodeStatus::Running;
  std::vector<LogEntry> log_;

  // Defined only in test code; lets tests pin or read the hidden time.
  friend struct EpisodeTestAccess;
};

}  // namespace chronoalign
