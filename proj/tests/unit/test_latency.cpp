// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/gamma.hpp>

#include "chronoalign/errors.hpp"
#include "chronoalign/latency.hpp"
#include "chronoalign/rng.hpp"

using namespace chronoalign;

namespace {

// Reference SplitMix64 finalizer, written out from the published constants.
std::uint64_t splitmix_ref(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double trapezoid_mass(double shape, double scale, double upper, double h) {
  const auto n = static_cast<long>(std::llround(upper / h));
  double s = 0.0;
  for (long i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * gamma_pdf(static_cast<double>(i) * h, shape, scale);
  }
  return s * h;
}

double ks_oracle(std::vector<double> xs, double shape, double scale) {
  boost::math::gamma_distribution<double> dist(shape, scale);
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = boost::math::cdf(dist, xs[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return d;
}

}  // namespace

TEST_CASE("mix64 matches the reference finalizer") {
  for (std::uint64_t x : {0ULL, 1ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL, 0x123456789ABCDEFULL})
    CHECK(mix64(x) == splitmix_ref(x));
  CHECK(splitmix_ref(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("derive_seed separates streams and parents") {
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(1, 0) != derive_seed(0, 1));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("uniform stays in the open unit interval and below() is bounded") {
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.below(7) < 7u);
  }
}

TEST_CASE("gamma_pdf values") {
  CHECK(gamma_pdf(0.0, 20.0, 1.75) == 0.0);
  CHECK(gamma_pdf(0.0, 1.0, 2.0) == doctest::Approx(0.5));
  CHECK(std::isinf(gamma_pdf(0.0, 0.5, 2.0)));
  const double mode = 19.0 * 1.75;
  const double peak = gamma_pdf(mode, 20.0, 1.75);
  for (double dx : {-1.0, -0.1, -1e-3, 1e-3, 0.1, 1.0}) CHECK(gamma_pdf(mode + dx, 20.0, 1.75) < peak);
  boost::math::gamma_distribution<double> dist(20.0, 1.75);
  for (double x : {5.0, 20.0, 33.25, 35.0, 50.0, 80.0})
    CHECK(gamma_pdf(x, 20.0, 1.75) == doctest::Approx(boost::math::pdf(dist, x)).epsilon(1e-12));
}

TEST_CASE("gamma_pdf rejects bad parameters") {
  CHECK_THROWS_AS(gamma_pdf(1.0, 0.0, 1.0), ParameterDomainError);
  CHECK_THROWS_AS(gamma_pdf(1.0, 2.0, -1.0), ParameterDomainError);
  CHECK_THROWS_AS(gamma_pdf(-1.0, 2.0, 1.0), ParameterDomainError);
}

TEST_CASE("gamma_pdf integrates to one over [0, 200]") {
  for (const auto& a : default_actions())
    CHECK(std::abs(trapezoid_mass(a.shape, a.scale(), 200.0, 0.01) - 1.0) < 1e-6);
}

TEST_CASE("default action table") {
  const auto acts = default_actions();
  REQUIRE(acts.size() == 3);
  CHECK(acts[0].mean_s == 35.0);
  CHECK(acts[1].mean_s == 45.0);
  CHECK(acts[2].mean_s == 55.0);
  for (const auto& a : acts) CHECK(a.shape == 20.0);
  CHECK(acts[0].scale() == doctest::Approx(1.75));
  CHECK(acts[0].bounds == Bounds{28.0, 42.0});
  CHECK(acts[1].bounds == Bounds{36.0, 54.0});
  CHECK(acts[2].bounds == Bounds{44.0, 58.0});
  CHECK(acts[0].command == "kubectl set image deployment/webapp-frontend new-container=nginx:1.23.4");
  CHECK(acts[1].command == "kubectl rollout restart statefulset/prometheus-db");
  CHECK(acts[2].command == "kubectl scale statefulset/etcd-cluster --replicas=5");
}

TEST_CASE("truncated draws respect bounds and seeds") {
  const auto a = default_actions()[0];
  LatencySampler s1(a, 7), s2(a, 7), s3(a, 8);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const double x = s1.sample();
    REQUIRE(a.bounds.contains(x));
    REQUIRE(x == s2.sample());
    differs = differs || x != s3.sample();
  }
  CHECK(differs);
}

TEST_CASE("untruncated Monte Carlo mean is near mean_s") {
  for (const auto& a : default_actions()) {
    LatencySampler s(a, 11);
    double sum = 0.0;
    constexpr int n = 1000000;
    for (int i = 0; i < n; ++i) sum += s.sample_untruncated();
    CHECK(std::abs(sum / n - a.mean_s) < 0.1);
  }
}

TEST_CASE("KS distance to the analytic CDF") {
  for (const auto& a : default_actions()) {
    LatencySampler s(a, 5);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = s.sample_untruncated();
    CHECK(ks_oracle(xs, a.shape, a.scale()) < 0.01);
  }
  // Small shapes take the boosted path.
  Rng rng(9);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_gamma(rng, 0.5, 2.0);
  CHECK(ks_oracle(xs, 0.5, 2.0) < 0.01);
}

TEST_CASE("infeasible bounds give up") {
  auto a = default_actions()[0];
  a.bounds = {35.0 - 1e-7, 35.0 + 1e-7};
  LatencySampler s(a, 1);
  CHECK_THROWS_AS(s.sample(), InfeasibleBoundsError);
}

TEST_CASE("action validation") {
  auto a = default_actions()[0];
  a.shape = 0.0;
  CHECK_THROWS_AS(a.validate(), ParameterDomainError);
  a = default_actions()[0];
  a.bounds = {40.0, 30.0};
  CHECK_THROWS_AS(a.validate(), ParameterDomainError);
  a = default_actions()[0];
  a.bounds = {36.0, 42.0};
  CHECK_THROWS_AS(a.validate(), ParameterDomainError);
}

TEST_CASE("actions JSON round trip and duplicate ids") {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : default_actions()) arr.push_back(action_to_json(a));
  CHECK(actions_from_json(arr, "actions") == default_actions());
  arr.push_back(arr[0]);
  CHECK_THROWS_AS(actions_from_json(arr, "actions"), ConfigError);
}
