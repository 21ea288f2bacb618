// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "chronoalign/errors.hpp"
#include "chronoalign/experiment.hpp"
#include "chronoalign/llm_bridge.hpp"
#include "chronoalign/rng.hpp"
#include "chronoalign/serialize.hpp"

namespace chronoalign {

double gamma_cdf(double x, double shape, double scale) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(shape, x / scale);
}

double ks_statistic_gamma(std::vector<double> samples, double shape, double scale) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = gamma_cdf(samples[i], shape, scale);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

CheckResult check_sampler_ks(std::uint64_t seed) {
  constexpr int kDraws = 100000;
  constexpr double kTolerance = 0.01;
  double worst = 0.0;
  std::string worst_id;
  for (const auto& a : default_actions()) {
    LatencySampler sampler(a, derive_seed(seed, 1));
    std::vector<double> xs(kDraws);
    for (auto& x : xs) x = sampler.sample_untruncated();
    const double d = ks_statistic_gamma(std::move(xs), a.shape, a.scale());
    if (d > worst) {
      worst = d;
      worst_id = a.id;
    }
  }
  return {"sampler-ks", worst < kTolerance, "max D = " + fmt(worst) + " (action " + worst_id + ")"};
}

CheckResult check_sampler_bounds(std::uint64_t seed) {
  for (const auto& a : default_actions()) {
    LatencySampler sampler(a, derive_seed(seed, 2));
    for (int i = 0; i < 10000; ++i) {
      const double x = sampler.sample();
      if (!a.bounds.contains(x))
        return {"sampler-bounds", false, "draw " + fmt(x) + " outside bounds of " + a.id};
    }
  }
  return {"sampler-bounds", true, "10000 draws per action within bounds"};
}

CheckResult check_pdf_mass() {
  constexpr double kStep = 0.01, kUpper = 200.0;
  double worst = 0.0;
  for (const auto& a : default_actions()) {
    const auto n = static_cast<long>(std::llround(kUpper / kStep));
    double sum = 0.0;
    for (long i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 0.5 : 1.0;
      sum += w * gamma_pdf(static_cast<double>(i) * kStep, a.shape, a.scale());
    }
    worst = std::max(worst, std::abs(sum * kStep - 1.0));
  }
  return {"pdf-mass", worst < 1e-6, "max |integral - 1| = " + fmt(worst)};
}

CheckResult check_regret_algebra() {
  const bool ok = std::abs(regret(1, 35.0, 35.0) - 1.0) < 1e-15 &&
                  std::abs(regret(2, 70.0, 35.0) - 2.0 * std::exp(1.0)) < 1e-12 &&
                  std::abs(regret(1, 60.0, 55.0) - std::exp(1.0 / 11.0)) < 1e-12;
  return {"regret-algebra", ok, ok ? "closed-form cases agree" : "closed-form mismatch"};
}

ExperimentConfig selftest_config(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.episodes = 24;
  cfg.seed = seed;
  cfg.policy.kind = "two_phase";
  return cfg;
}

CheckResult check_regret_domain(const SelftestOptions& options) {
  auto records = run_replicate(selftest_config(options.seed), 0).records;
  if (options.inject_corrupt_record) {
    EpisodeRecord bad;
    bad.k = static_cast<int>(records.size()) + 1;
    bad.action_id = "A";
    bad.t_true = 40.0;
    bad.t_confirm = 30.0;
    bad.n_check = 1;
    bad.total_sleep_s = 30.0;
    records.push_back(bad);
  }
  for (const auto& r : records) {
    try {
      const double g = regret(r);
      if (!(g >= 1.0) || !std::isfinite(g))
        return {"regret-domain", false, "episode " + std::to_string(r.k) + " regret " + fmt(g)};
    } catch (const CorruptedRecordError& e) {
      return {"regret-domain", false, "episode " + std::to_string(r.k) + ": " + e.what()};
    }
  }
  return {"regret-domain", true, std::to_string(records.size()) + " records in domain"};
}

CheckResult check_info_barrier(const SelftestOptions& options) {
  const auto cfg = selftest_config(options.seed);
  const auto policy = make_policy(cfg.policy.kind, cfg.policy.params);
  const auto schedule = build_schedule(cfg, options.seed);

  double hidden = 0.0;
  ContextSerializer serialize = context_to_json;
  if (options.tamper_serializer)
    serialize = [&hidden](const PolicyContext& ctx) {
      auto j = context_to_json(ctx);
      j["t_true"] = hidden;
      return j;
    };

  std::vector<EpisodeRecord> prior;
  std::size_t audited = 0;
  for (int k = 1; k <= cfg.episodes; ++k) {
    auto episode = Episode::start(cfg.action(schedule[static_cast<std::size_t>(k - 1)]),
                                  derive_seed(options.seed, static_cast<std::uint64_t>(k)), cfg.clock, k);
    std::vector<PolicyContext> seen;
    while (episode.status() == EpisodeStatus::Running) {
      seen.push_back(build_context(cfg, prior, episode));
      episode.step(policy->decide(seen.back()));
    }
    const auto record = episode.finish();
    hidden = record.t_true;
    for (const auto& ctx : seen) {
      if (auto leak = audit_information_barrier(serialize(ctx), record.t_true))
        return {"info-barrier", false, "episode " + std::to_string(k) + ": " + *leak};
      ++audited;
    }
    prior.push_back(record);
  }
  return {"info-barrier", true, std::to_string(audited) + " contexts audited"};
}

CheckResult check_grammar_roundtrip(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 3));
  std::vector<Move> moves = {Check{}, make_sleep(0.5), make_sleep(60.0), make_sleep(108.0)};
  for (int i = 0; i < 2000; ++i) moves.push_back(make_sleep(0.001 + rng.uniform() * 599.0));
  for (const auto& m : moves) {
    const auto text = format_move(m);
    const auto parsed = parse_action(text);
    const bool same = std::visit(
        [&](const auto& p) -> bool {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, InvalidAction>) return false;
          else return Move(p) == m;
        },
        parsed);
    if (!same) return {"grammar-roundtrip", false, "'" + text + "' did not round-trip"};
  }
  const std::vector<std::string> hostile = {
      "import os; os.system('true')", "time.sleep(-1)", "time.sleep(0)", "time.sleep(1e9)",
      "check(); check()", "time.sleep(5); check()", "__import__('time').sleep(5)",
      "time.sleep(float('nan'))", "", "print(1)"};
  for (const auto& h : hostile)
    if (!std::holds_alternative<InvalidAction>(parse_action(h)))
      return {"grammar-roundtrip", false, "accepted '" + h + "'"};
  return {"grammar-roundtrip", true,
          std::to_string(moves.size()) + " moves round-tripped, " + std::to_string(hostile.size()) +
              " hostile inputs rejected"};
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestOptions& options) {
  return {check_sampler_ks(options.seed),   check_sampler_bounds(options.seed),
          check_pdf_mass(),                 check_regret_algebra(),
          check_regret_domain(options),     check_info_barrier(options),
          check_grammar_roundtrip(options.seed)};
}

}  // namespace chronoalign
