// SPDX-License-Identifier: Apache-2.0
#include "chronoalign/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chronoalign/errors.hpp"
#include "chronoalign/serialize.hpp"

namespace chronoalign {

namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string records_to_jsonl(const std::vector<EpisodeRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<EpisodeRecord> records_from_jsonl(const std::string& text) {
  std::vector<EpisodeRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError("line " + std::to_string(line_no), "malformed JSON");
    try {
      out.push_back(record_from_json(j));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no), e.what());
    }
  }
  return out;
}

std::string curve_to_csv(const std::vector<CurvePoint>& series) {
  std::string out = "k,regret,time_diff_s,n_check\n";
  for (const auto& p : series)
    out += std::to_string(p.k) + "," + format_number(p.regret) + "," + format_number(p.time_diff_s) +
           "," + std::to_string(p.n_check) + "\n";
  return out;
}

std::string mean_curve_to_csv(const std::vector<RunResult>& results, const std::string& action_id) {
  struct Acc {
    double regret = 0.0, diff = 0.0, checks = 0.0;
    int count = 0;
  };
  std::vector<Acc> acc;
  for (const auto& run : results) {
    const auto it = run.curves.find(action_id);
    if (it == run.curves.end()) continue;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      if (acc.size() <= i) acc.resize(i + 1);
      acc[i].regret += it->second[i].regret;
      acc[i].diff += it->second[i].time_diff_s;
      acc[i].checks += it->second[i].n_check;
      ++acc[i].count;
    }
  }
  std::string out = "n,regret,time_diff_s,n_check\n";
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double c = acc[i].count;
    out += std::to_string(i + 1) + "," + format_number(acc[i].regret / c) + "," +
           format_number(acc[i].diff / c) + "," + format_number(acc[i].checks / c) + "\n";
  }
  return out;
}

nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
  nlohmann::json actions = nlohmann::json::object();
  nlohmann::json per_replicate = nlohmann::json::array();
  nlohmann::json aborted = nlohmann::json::array();
  double all_regret = 0.0;
  int all_episodes = 0, all_single = 0;

  for (const auto& a : cfg.actions) {
    double mean = 0.0, p1 = 0.0, p2 = 0.0, rate = 0.0, fin = 0.0;
    int runs = 0, episodes = 0;
    for (const auto& run : results) {
      const auto it = run.aggregates.find(a.id);
      if (it == run.aggregates.end()) continue;
      const auto& g = it->second;
      mean += g.mean_regret;
      p1 += g.phase1_mean_regret;
      p2 += g.phase2_mean_regret;
      rate += g.single_check_rate;
      fin += g.final_regret;
      episodes += g.episodes;
      ++runs;
    }
    if (runs == 0) continue;
    const double n = runs;
    actions[a.id] = {{"name", a.name},
                     {"episodes", episodes},
                     {"mean_regret", mean / n},
                     {"phase1_mean_regret", p1 / n},
                     {"phase2_mean_regret", p2 / n},
                     {"single_check_rate", rate / n},
                     {"final_regret", fin / n}};
  }

  for (const auto& run : results) {
    nlohmann::json aggs = nlohmann::json::object();
    for (const auto& [id, g] : run.aggregates)
      aggs[id] = {{"episodes", g.episodes},
                  {"mean_regret", g.mean_regret},
                  {"phase1_mean_regret", g.phase1_mean_regret},
                  {"phase2_mean_regret", g.phase2_mean_regret},
                  {"single_check_rate", g.single_check_rate},
                  {"final_regret", g.final_regret}};
    per_replicate.push_back({{"replicate", run.replicate}, {"seed", run.seed}, {"actions", aggs}});
    for (const auto& a : run.aborted) {
      auto j = aborted_to_json(a);
      j["replicate"] = run.replicate;
      aborted.push_back(std::move(j));
    }
    for (const auto& r : run.records) {
      all_regret += regret(r);
      if (r.n_check == 1) ++all_single;
      ++all_episodes;
    }
  }

  return {{"policy", cfg.policy.kind},
          {"episodes", cfg.episodes},
          {"replicates", cfg.replicates},
          {"seed", cfg.seed},
          {"actions", actions},
          {"overall",
           {{"episodes", all_episodes},
            {"mean_regret", all_episodes ? all_regret / all_episodes : 0.0},
            {"single_check_rate",
             all_episodes ? static_cast<double>(all_single) / all_episodes : 0.0}}},
          {"per_replicate", per_replicate},
          {"diagnostics",
           {{"aborted_count", aborted.size()}, {"aborted", aborted}}}};
}

std::vector<PdfRow> pdf_rows(const std::vector<ActionSpec>& actions, double x_max, double step) {
  std::vector<PdfRow> rows;
  const auto points = static_cast<long>(std::llround(x_max / step));
  for (const auto& a : actions) {
    for (long i = 0; i <= points; ++i) {
      const double x = static_cast<double>(i) * step;
      rows.push_back({a.id, x, gamma_pdf(x, a.shape, a.scale())});
    }
  }
  return rows;
}

std::string pdf_to_csv(const std::vector<PdfRow>& rows) {
  std::string out = "action_id,x,density\n";
  for (const auto& r : rows)
    out += r.action_id + "," + format_number(r.x) + "," + format_number(r.density) + "\n";
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("path", "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

void write_single(const fs::path& dir, const RunResult& run) {
  write_text_file(dir / "episodes.jsonl", records_to_jsonl(run.records));
  for (const auto& [id, series] : run.curves)
    write_text_file(dir / ("curve_" + id + ".csv"), curve_to_csv(series));
}

}  // namespace

void write_run_artifacts(const fs::path& out_dir, const ExperimentConfig& cfg,
                         const std::vector<RunResult>& results) {
  fs::create_directories(out_dir);
  if (results.empty()) return;
  write_single(out_dir, results.front());
  if (results.size() > 1) {
    for (const auto& run : results)
      write_single(out_dir / "replicates" / ("r" + std::to_string(run.replicate)), run);
    for (const auto& a : cfg.actions)
      write_text_file(out_dir / ("curve_" + a.id + "_mean.csv"), mean_curve_to_csv(results, a.id));
  }
  write_text_file(out_dir / "summary.json", summary_json(cfg, results).dump(2) + "\n");
}

}  // namespace chronoalign
