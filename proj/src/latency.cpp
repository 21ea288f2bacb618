// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/latency.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "chronoalign/errors.hpp"
#include "chronoalign/json_fields.hpp"

namespace chronoalign {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Marsaglia & Tsang squeeze for shape >= 1, unit scale.
double gamma_unit_large(Rng& rng, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

void ActionSpec::validate() const {
  std::ostringstream why;
  if (!positive_finite(mean_s)) why << "mean_s must be > 0; ";
  if (!positive_finite(shape)) why << "shape must be > 0; ";
  if (!(positive_finite(bounds.lo_s) && std::isfinite(bounds.hi_s) && bounds.lo_s < bounds.hi_s))
    why << "bounds must satisfy 0 < lo_s < hi_s; ";
  else if (!(bounds.lo_s < mean_s && mean_s < bounds.hi_s))
    why << "bounds must straddle mean_s; ";
  const auto msg = why.str();
  if (!msg.empty())
    throw ParameterDomainError("action '" + id + "': " + msg.substr(0, msg.size() - 2));
}

double gamma_pdf(double x, double shape, double scale) {
  if (!positive_finite(shape) || !positive_finite(scale))
    throw ParameterDomainError("gamma_pdf: shape and scale must be positive");
  if (!(x >= 0.0) || std::isinf(x)) throw ParameterDomainError("gamma_pdf: x must be >= 0");

  if (x == 0.0) {
    if (shape > 1.0) return 0.0;
    if (shape == 1.0) return 1.0 / scale;
    return std::numeric_limits<double>::infinity();
  }
  const double log_density = (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
                             shape * std::log(scale);
  return std::exp(log_density);
}

double sample_gamma(Rng& rng, double shape, double scale) {
  if (!positive_finite(shape) || !positive_finite(scale))
    throw ParameterDomainError("sample_gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // G(a) = G(a + 1) * U^(1/a)
    const double g = gamma_unit_large(rng, shape + 1.0);
    return g * std::pow(rng.uniform(), 1.0 / shape) * scale;
  }
  return gamma_unit_large(rng, shape) * scale;
}

LatencySampler::LatencySampler(ActionSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed) {
  spec_.validate();
}

double LatencySampler::sample() {
  for (int attempt = 0; attempt < kMaxConsecutiveRejections; ++attempt) {
    const double x = sample_gamma(rng_, spec_.shape, spec_.scale());
    if (spec_.bounds.contains(x)) return x;
  }
  std::ostringstream os;
  os << "action '" << spec_.id << "': " << kMaxConsecutiveRejections
     << " consecutive draws fell outside [" << spec_.bounds.lo_s << ", " << spec_.bounds.hi_s
     << "]";
  throw InfeasibleBoundsError(os.str());
}

double LatencySampler::sample_untruncated() {
  return sample_gamma(rng_, spec_.shape, spec_.scale());
}

std::vector<ActionSpec> default_actions() {
  return {
      {"A", "Image Update",
       "kubectl set image deployment/webapp-frontend new-container=nginx:1.23.4", 35.0, 20.0,
       {28.0, 42.0}},
      {"B", "Service Restart", "kubectl rollout restart statefulset/prometheus-db", 45.0, 20.0,
       {36.0, 54.0}},
      {"C", "Cluster Scale-up", "kubectl scale statefulset/etcd-cluster --replicas=5", 55.0, 20.0,
       {44.0, 58.0}},
  };
}

std::vector<ActionSpec> actions_from_json(const nlohmann::json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(path, "expected a non-empty array");
  std::vector<ActionSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto at = path + "[" + std::to_string(i) + "]";
    const auto& item = arr[i];
    ActionSpec spec;
    spec.id = fields::string(item, "id", at);
    spec.name = fields::string_or(item, "name", at, spec.id);
    spec.command = fields::string(item, "command", at);
    spec.mean_s = fields::number(item, "mean_s", at);
    spec.shape = fields::number(item, "shape", at);
    spec.bounds.lo_s = fields::number(item, "lo_s", at);
    spec.bounds.hi_s = fields::number(item, "hi_s", at);
    try {
      spec.validate();
    } catch (const ParameterDomainError& e) {
      throw ConfigError(at, e.what());
    }
    for (const auto& prior : out)
      if (prior.id == spec.id) throw ConfigError(at + ".id", "duplicate action id '" + spec.id + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

nlohmann::json action_to_json(const ActionSpec& spec) {
  return {{"id", spec.id},         {"name", spec.name},   {"command", spec.command},
          {"mean_s", spec.mean_s}, {"shape", spec.shape}, {"lo_s", spec.bounds.lo_s},
          {"hi_s", spec.bounds.hi_s}};
}

}  // namespace chronoalign
