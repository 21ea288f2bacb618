// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "chronoalign/latency.hpp"

namespace chronoalign {

struct SelftestOptions {
  /// Adds a record with t_confirm < t_true to the regret-domain check.
  bool inject_corrupt_record = false;
  /// Swaps in a context serializer that leaks the hidden completion time.
  bool tamper_serializer = false;
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Named checks: sampler-ks, sampler-bounds, pdf-mass, regret-algebra,
/// regret-domain, info-barrier, grammar-roundtrip.
std::vector<CheckResult> run_selftest(const SelftestOptions& options = {});

/// Kolmogorov-Smirnov statistic of `samples` against Gamma(shape, scale).
double ks_statistic_gamma(std::vector<double> samples, double shape, double scale);

/// Analytic Gamma CDF (regularized lower incomplete gamma).
double gamma_cdf(double x, double shape, double scale);

}  // namespace chronoalign
