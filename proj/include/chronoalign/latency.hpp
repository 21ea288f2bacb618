// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoalign/rng.hpp"

namespace chronoalign {

/// Closed truncation interval, seconds.
struct Bounds {
  double lo_s = 0.0;
  double hi_s = 0.0;

  bool contains(double x) const { return lo_s <= x && x <= hi_s; }
  bool operator==(const Bounds&) const = default;
};

/// One simulated command and the Gamma law of its completion time.
///
/// `mean_s` is the mean of the parent (untruncated) Gamma. The scale is
/// always derived from it and never stored.
struct ActionSpec {
  std::string id;
  std::string name;
  std::string command;
  double mean_s = 0.0;
  double shape = 0.0;
  Bounds bounds;

  double scale() const { return mean_s / shape; }
  double mode() const { return shape > 1.0 ? (shape - 1.0) * scale() : 0.0; }

  /// Throws ParameterDomainError when an invariant is violated.
  void validate() const;

  bool operator==(const ActionSpec&) const = default;
};

/// Gamma density with shape/scale parameterization.
///
/// Throws ParameterDomainError for shape <= 0, scale <= 0 or x < 0.
/// At x == 0 the density is 0 for shape > 1, 1/scale for shape == 1 and
/// +infinity for shape < 1.
double gamma_pdf(double x, double shape, double scale);

/// One exact draw from Gamma(shape, scale) (Marsaglia & Tsang, with the
/// usual boost for shape < 1).
double sample_gamma(Rng& rng, double shape, double scale);

/// Draws hidden completion times for one action. Single owner; holds its
/// own generator so distinct samplers never share state.
class LatencySampler {
 public:
  static constexpr int kMaxConsecutiveRejections = 10000;

  LatencySampler(ActionSpec spec, std::uint64_t seed);

  /// Truncated draw: Gamma conditioned on the spec bounds, by rejection.
  /// Throws InfeasibleBoundsError after kMaxConsecutiveRejections misses.
  double sample();

  /// Parent-distribution draw, bypassing truncation.
  double sample_untruncated();

  const ActionSpec& spec() const { return spec_; }

 private:
  ActionSpec spec_;
  Rng rng_;
};

/// The three kubectl actions: Image Update, Service Restart, Cluster
/// Scale-up (means 35/45/55 s, shape 20).
std::vector<ActionSpec> default_actions();

/// Parses `[{id, name, command, mean_s, shape, lo_s, hi_s}, ...]`.
/// `path` prefixes field names in ConfigError diagnostics.
std::vector<ActionSpec> actions_from_json(const nlohmann::json& arr,
                                          const std::string& path = "actions");

nlohmann::json action_to_json(const ActionSpec& spec);

}  // namespace chronoalign
