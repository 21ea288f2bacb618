// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/cli.hpp"

#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "chronoalign/config.hpp"
#include "chronoalign/errors.hpp"
#include "chronoalign/fixture.hpp"
#include "chronoalign/report.hpp"
#include "chronoalign/selftest.hpp"

namespace chronoalign {

namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config,-c", args.config, "experiment config file (JSON)");
  cmd->add_option("--preset,-p", args.preset, "named preset")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--seed", args.seed, "override the master seed");
  cmd->add_option("--replicates", args.replicates, "override the replicate count");
}

// Returns the raw JSON too so callers can read the optional output block.
std::pair<ExperimentConfig, nlohmann::json> resolve_config(const ConfigArgs& args) {
  if (!args.config.empty() && !args.preset.empty())
    throw ConfigError("", "--config and --preset are mutually exclusive");
  nlohmann::json j = nlohmann::json::object();
  if (!args.config.empty())
    j = load_config_file(args.config);
  else if (!args.preset.empty())
    j = preset_json(args.preset);
  if (args.seed && j.is_object()) j["seed"] = *args.seed;
  if (args.replicates && j.is_object()) j["replicates"] = *args.replicates;
  return {config_from_json(j), j};
}

fs::path output_dir(const std::string& flag, const nlohmann::json& raw) {
  if (!flag.empty()) return flag;
  if (raw.is_object() && raw.contains("output") && raw["output"].is_object() &&
      raw["output"].contains("dir") && raw["output"]["dir"].is_string())
    return raw["output"]["dir"].get<std::string>();
  return "out";
}

void print_final_regret(std::ostream& out, const ExperimentConfig& cfg,
                        const std::vector<RunResult>& results) {
  const auto summary = summary_json(cfg, results);
  out << "policy " << cfg.policy.kind << ", " << cfg.episodes << " episodes, " << cfg.replicates
      << " replicate(s)\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& [id, a] : summary["actions"].items())
    out << "  " << id << " (" << a["name"].get<std::string>() << ")  final regret "
        << a["final_regret"].get<double>() << "  mean regret " << a["mean_regret"].get<double>()
        << "  single-check rate " << a["single_check_rate"].get<double>() << "\n";
  out << "  overall mean regret " << summary["overall"]["mean_regret"].get<double>() << "\n";
  out.unsetf(std::ios::floatfield);
  const auto aborted = summary["diagnostics"]["aborted_count"].get<std::size_t>();
  if (aborted > 0) out << "  aborted episodes: " << aborted << "\n";
}

int cmd_simulate(const ConfigArgs& args, const std::string& out_flag, bool verbose,
                 std::ostream& out) {
  const auto [cfg, raw] = resolve_config(args);
  std::unique_ptr<HttpChatClient> client;
  if (cfg.policy.kind == "llm") client = std::make_unique<HttpChatClient>(cfg.endpoint);
  const auto results = run_experiment(cfg, client.get());
  const auto dir = output_dir(out_flag, raw);
  write_run_artifacts(dir, cfg, results);
  if (verbose)
    for (const auto& r : results.front().records)
      out << "episode " << r.k << " action " << r.action_id << " n_check " << r.n_check
          << " regret " << format_number(regret(r)) << "\n";
  print_final_regret(out, cfg, results);
  out << "artifacts written to " << dir.string() << "\n";
  return 0;
}

int cmd_report(const ConfigArgs& args, const std::string& episodes_path, const std::string& out_flag,
               std::ostream& out) {
  auto [cfg, raw] = resolve_config(args);
  RunResult run;
  run.records = records_from_jsonl(read_text_file(episodes_path));
  for (const auto& r : run.records) {
    cfg.action(r.action_id);
    run.schedule.push_back(r.action_id);
  }
  run.curves = learning_curves(run);
  run.aggregates = aggregate(run);
  cfg.episodes = static_cast<int>(run.records.size());
  const std::vector<RunResult> results{run};
  if (!out_flag.empty()) {
    const fs::path dir = out_flag;
    for (const auto& [id, series] : run.curves)
      write_text_file(dir / ("curve_" + id + ".csv"), curve_to_csv(series));
    write_text_file(dir / "summary.json", summary_json(cfg, results).dump(2) + "\n");
  }
  print_final_regret(out, cfg, results);
  return 0;
}

int cmd_pdf(const ConfigArgs& args, const std::string& out_flag, double x_max, double step,
            std::ostream& out) {
  const auto [cfg, raw] = resolve_config(args);
  if (!(step > 0.0) || !(x_max > 0.0)) throw ConfigError("pdf", "--x-max and --step must be positive");
  const auto csv = pdf_to_csv(pdf_rows(cfg.actions, x_max, step));
  if (out_flag.empty())
    out << csv;
  else
    write_text_file(out_flag, csv);
  return 0;
}

int cmd_selftest(const SelftestOptions& options, std::ostream& out) {
  bool ok = true;
  for (const auto& c : run_selftest(options)) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

int cmd_record_fixture(const ConfigArgs& args, const std::string& out_flag, std::ostream& out) {
  auto [cfg, raw] = resolve_config(args);
  if (cfg.policy.kind != "llm") throw ConfigError("policy.kind", "record-fixture needs the llm policy");
  if (out_flag.empty()) throw ConfigError("out", "record-fixture needs --out <fixture dir>");
  cfg.replicates = 1;
  HttpChatClient http(cfg.endpoint);
  RecordingChatClient recorder(http, out_flag);
  const auto run = run_replicate(cfg, 0, &recorder);
  recorder.finalize();
  out << "recorded " << recorder.recorded() << " exchanges to " << out_flag << "\n";
  print_final_regret(out, cfg, {run});
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latency-aware waiting policies: simulation, reports and self-checks"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "per-episode output");

  ConfigArgs sim_args, rep_args, pdf_args, rec_args;
  std::string sim_out, rep_out, pdf_out, rec_out, episodes_path;
  double x_max = 100.0, step = 0.1;
  SelftestOptions st;

  auto* sim = app.add_subcommand("simulate", "run an experiment and write artifacts");
  add_config_options(sim, sim_args);
  sim->add_option("--out,-o", sim_out, "artifact directory (default: output.dir or ./out)");

  auto* rep = app.add_subcommand("report", "recompute curves and summary from episodes.jsonl");
  add_config_options(rep, rep_args);
  rep->add_option("--episodes", episodes_path, "episodes.jsonl to read")->required();
  rep->add_option("--out,-o", rep_out, "directory for curve CSVs and summary.json");

  auto* pdf = app.add_subcommand("pdf", "tabulate the latency densities as CSV");
  add_config_options(pdf, pdf_args);
  pdf->add_option("--out,-o", pdf_out, "CSV path (default: stdout)");
  pdf->add_option("--x-max", x_max, "grid upper end in seconds");
  pdf->add_option("--step", step, "grid step in seconds");

  auto* self = app.add_subcommand("selftest", "run the built-in consistency checks");
  self->add_option("--seed", st.seed, "seed for the sampled checks");
  self->add_flag("--inject-corrupt-record", st.inject_corrupt_record,
                 "add a record with t_confirm < t_true");
  self->add_flag("--tamper-serializer", st.tamper_serializer,
                 "use a context serializer that leaks the hidden time");

  auto* rec = app.add_subcommand("record-fixture", "run the llm policy once and record a fixture");
  add_config_options(rec, rec_args);
  rec->add_option("--out,-o", rec_out, "fixture directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_args, sim_out, verbose, out);
    if (*rep) return cmd_report(rep_args, episodes_path, rep_out, out);
    if (*pdf) return cmd_pdf(pdf_args, pdf_out, x_max, step, out);
    if (*self) return cmd_selftest(st, out);
    if (*rec) return cmd_record_fixture(rec_args, rec_out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CorruptedRecordError& e) {
    err << "corrupted record: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace chronoalign
