// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "chronoalign/errors.hpp"
#include "chronoalign/rng.hpp"

namespace chronoalign {

namespace {

constexpr std::uint64_t kScheduleStream = 0x7363686564756c65ULL;

}  // namespace

void ExperimentConfig::validate() const {
  if (actions.empty()) throw ConfigError("actions", "at least one action is required");
  for (const auto& a : actions) a.validate();
  if (episodes < 1) throw ConfigError("episodes", "must be >= 1");
  if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
  if (history_window && *history_window < 0) throw ConfigError("history_window", "must be >= 0");
  if (max_parallel < 0) throw ConfigError("max_parallel", "must be >= 0");
  clock.validate();
  if (schedule.kind == ScheduleKind::Explicit) {
    if (static_cast<int>(schedule.explicit_ids.size()) != episodes)
      throw ScheduleError("explicit schedule has " + std::to_string(schedule.explicit_ids.size()) +
                          " entries for " + std::to_string(episodes) + " episodes");
    for (const auto& id : schedule.explicit_ids) (void)action(id);
  }
  if (policy.kind == "llm")
    endpoint.validate();
  else
    (void)make_policy(policy.kind, policy.params);
}

const ActionSpec& ExperimentConfig::action(const std::string& id) const {
  for (const auto& a : actions)
    if (a.id == id) return a;
  throw ScheduleError("unknown action id '" + id + "'");
}

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return derive_seed(master, static_cast<std::uint64_t>(replicate));
}

std::vector<std::string> build_schedule(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.actions.empty()) throw ScheduleError("no actions to schedule");
  if (cfg.episodes < 1) throw ScheduleError("episodes must be >= 1");
  const auto n = static_cast<std::size_t>(cfg.episodes);

  if (cfg.schedule.kind == ScheduleKind::Explicit) {
    if (cfg.schedule.explicit_ids.size() != n)
      throw ScheduleError("explicit schedule has " + std::to_string(cfg.schedule.explicit_ids.size()) +
                          " entries for " + std::to_string(n) + " episodes");
    for (const auto& id : cfg.schedule.explicit_ids) (void)cfg.action(id);
    return cfg.schedule.explicit_ids;
  }

  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(cfg.actions[i % cfg.actions.size()].id);

  if (cfg.schedule.kind == ScheduleKind::SeededShuffle) {
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(out[i], out[rng.below(i + 1)]);
  }
  return out;
}

double regret(int n_check, double t_confirm, double t_true) {
  if (n_check < 1 || !(t_true > 0.0) || !std::isfinite(t_true) || !std::isfinite(t_confirm))
    throw CorruptedRecordError("regret: not a finalized episode (n_check=" +
                               std::to_string(n_check) + ")");
  if (t_confirm < t_true)
    throw CorruptedRecordError("regret: t_confirm " + std::to_string(t_confirm) +
                               " precedes t_true " + std::to_string(t_true));
  return static_cast<double>(n_check) * std::exp((t_confirm - t_true) / t_true);
}

double regret(const EpisodeRecord& record) {
  return regret(record.n_check, record.t_confirm, record.t_true);
}

LearningCurves learning_curves(const RunResult& result) {
  LearningCurves curves;
  for (const auto& r : result.records)
    curves[r.action_id].push_back({r.k, regret(r), r.t_confirm - r.t_true, r.n_check});
  return curves;
}

std::map<std::string, ActionAggregate> aggregate(const RunResult& result) {
  std::map<std::string, ActionAggregate> out;
  for (const auto& [id, series] : learning_curves(result)) {
    ActionAggregate agg;
    agg.episodes = static_cast<int>(series.size());
    double total = 0.0, later = 0.0;
    int single = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
      total += series[i].regret;
      if (i > 0) later += series[i].regret;
      if (series[i].n_check == 1) ++single;
    }
    agg.mean_regret = total / static_cast<double>(series.size());
    agg.phase1_mean_regret = series.front().regret;
    agg.phase2_mean_regret =
        series.size() > 1 ? later / static_cast<double>(series.size() - 1) : 0.0;
    agg.single_check_rate = static_cast<double>(single) / static_cast<double>(series.size());
    agg.final_regret = series.back().regret;
    out[id] = agg;
  }
  return out;
}

PolicyContext build_context(const ExperimentConfig& cfg, const std::vector<EpisodeRecord>& prior,
                            const Episode& episode) {
  PolicyContext ctx;
  ctx.command = episode.action().command;
  ctx.k = episode.index();
  ctx.elapsed_s = episode.elapsed_s();
  ctx.observations = episode.log();

  std::size_t first = 0;
  if (cfg.history_window && prior.size() > static_cast<std::size_t>(*cfg.history_window))
    first = prior.size() - static_cast<std::size_t>(*cfg.history_window);
  for (std::size_t i = first; i < prior.size(); ++i) {
    const auto& command = cfg.action(prior[i].action_id).command;
    ctx.history.push_back(summarize(prior[i], command));
    ctx.detailed_history.push_back(trace_of(prior[i], command));
  }
  return ctx;
}

RunResult run_replicate(const ExperimentConfig& cfg, int replicate, ChatClient* client) {
  RunResult result;
  result.replicate = replicate;
  result.seed = replicate_seed(cfg.seed, replicate);
  result.schedule = build_schedule(cfg, derive_seed(result.seed, kScheduleStream));

  const bool llm = cfg.policy.kind == "llm";
  if (llm && client == nullptr) throw EndpointError("llm policy requires a chat client");
  std::unique_ptr<Policy> policy;
  if (!llm) policy = make_policy(cfg.policy.kind, cfg.policy.params);

  for (int k = 1; k <= cfg.episodes; ++k) {
    const auto& spec = cfg.action(result.schedule[static_cast<std::size_t>(k - 1)]);
    auto episode =
        Episode::start(spec, derive_seed(result.seed, static_cast<std::uint64_t>(k)), cfg.clock, k);
    try {
      if (llm) {
        const auto ctx = build_context(cfg, result.records, episode);
        run_llm_episode(*client, cfg.endpoint, episode, ctx.history);
      } else {
        while (episode.status() == EpisodeStatus::Running)
          episode.step(policy->decide(build_context(cfg, result.records, episode)));
      }
    } catch (const BudgetExceededError&) {
      result.aborted.push_back(episode.aborted_summary());
      continue;
    }
    result.records.push_back(episode.finish());
  }
  result.curves = learning_curves(result);
  result.aggregates = aggregate(result);
  return result;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, ChatClient* client) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.replicates);
  std::vector<RunResult> results(n);
  std::vector<std::exception_ptr> failures(n);

  std::size_t workers = cfg.max_parallel > 0 ? static_cast<std::size_t>(cfg.max_parallel)
                                             : std::max(1u, std::thread::hardware_concurrency());
  if (cfg.policy.kind == "llm")
    workers = std::min(workers, static_cast<std::size_t>(cfg.endpoint.max_in_flight));
  workers = std::min(workers, n);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      try {
        results[r] = run_replicate(cfg, static_cast<int>(r), client);
      } catch (...) {
        failures[r] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return results;
}

}  // namespace chronoalign
