// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronoalign/experiment.hpp"

namespace chronoalign {

/// Shortest round-trip decimal rendering; identical bytes for identical doubles.
std::string format_number(double value);

std::string records_to_jsonl(const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> records_from_jsonl(const std::string& text);

/// Header `k,regret,time_diff_s,n_check`.
std::string curve_to_csv(const std::vector<CurvePoint>& series);

/// Mean of each action's n-th episode across replicates. Header
/// `n,regret,time_diff_s,n_check`.
std::string mean_curve_to_csv(const std::vector<RunResult>& results, const std::string& action_id);

/// Aggregates averaged across replicates, per-replicate aggregates and the
/// aborted-episode diagnostics.
nlohmann::json summary_json(const ExperimentConfig& cfg, const std::vector<RunResult>& results);

struct PdfRow {
  std::string action_id;
  double x = 0.0;
  double density = 0.0;
};

/// Gamma density of each action on the grid 0, step, ..., x_max.
std::vector<PdfRow> pdf_rows(const std::vector<ActionSpec>& actions, double x_max = 100.0,
                             double step = 0.1);

/// Header `action_id,x,density`.
std::string pdf_to_csv(const std::vector<PdfRow>& rows);

/// Writes episodes.jsonl, curve_<id>.csv and summary.json for replicate 0,
/// plus replicates/r<i>/... and curve_<id>_mean.csv when there are several.
void write_run_artifacts(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                         const std::vector<RunResult>& results);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace chronoalign
