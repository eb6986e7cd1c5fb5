// Copyright 2026 The protofed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "protofed/config.hpp"
#include "protofed/federation.hpp"

namespace protofed {

/// Column names of the per-round CSV for the given domain names.
std::vector<std::string> round_csv_header(const std::vector<std::string>& domain_names);

/// Per-round CSV: header row then one row per round; floats use 6 significant
/// digits. No wall-clock column; see emit_timing_csv.
void write_round_csv(const MetricsLog& log, std::ostream& out);
void emit_csv(const MetricsLog& log, const std::filesystem::path& path);

/// Wall-clock seconds per round, kept apart from the deterministic CSV.
void emit_timing_csv(const MetricsLog& log, const std::filesystem::path& path);

/// Final-round accuracy statistics over the seeds of one configuration.
struct SeedSummary {
  std::string label;
  std::vector<std::string> domain_names;
  std::vector<double> domain_mean;
  std::vector<double> domain_std;
  double average_mean = 0.0;
  double average_std = 0.0;
  double variance_metric_mean = 0.0;
  /// Mean over rounds and seeds of prototypes each client downloads per round.
  double downloaded_per_round_mean = 0.0;
  double uploaded_per_round_mean = 0.0;
  std::vector<double> domain_prototype_count_mean;
  std::size_t seeds = 0;
};

/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_std(const std::vector<double>& xs);

SeedSummary summarize(const std::string& label, const std::vector<MetricsLog>& logs);

/// One row per summary; `delta` is each average_mean minus the first row's.
void write_summary_csv(const std::vector<SeedSummary>& rows, std::ostream& out);

struct ExperimentResult {
  std::string label;
  ExperimentConfig config;
  std::vector<MetricsLog> logs;
  SeedSummary summary;
};

/// Runs `config` once per seed. When `out_dir` is non-empty, writes
/// `<label>_seed<seed>.csv` per seed and `<label>_summary.csv`.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& label,
                                const std::filesystem::path& out_dir = {});

struct PresetVariant {
  std::string label;
  /// key=value overrides applied on top of the base config.
  std::vector<std::string> overrides;
};

std::vector<std::string> preset_names();
/// Throws std::invalid_argument for an unknown preset.
std::vector<PresetVariant> preset_variants(const std::string& name);

/// Runs every variant of a preset and writes `<name>_comparison.csv` next to
/// the per-variant outputs.
std::vector<ExperimentResult> run_preset(const std::string& name, const ExperimentConfig& base,
                                         const std::filesystem::path& out_dir);

/// Writes every client training sample and every domain test sample as CSV
/// with columns split,client,domain,label,x0..x{V-1}.
void write_dataset_csv(const FederatedDataset& data, std::ostream& out);

}  // namespace protofed
