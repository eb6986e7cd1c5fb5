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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "protofed/experiment.hpp"

using namespace protofed;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.rounds = 2;
  c.shape.input_dim = 6;
  c.shape.hidden_dims = {8};
  c.shape.feature_dim = 4;
  c.shape.num_classes = 3;
  for (auto& d : c.domains) {
    d.n_train = 24;
    d.n_test = 30;
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("csv emission: header only, one row per round") {
  TempDir dir("protofed_csv_test");
  MetricsLog empty;
  empty.domain_names = {"a", "b"};
  emit_csv(empty, dir.path / "empty.csv");
  const auto header_only = lines_of(slurp(dir.path / "empty.csv"));
  REQUIRE(header_only.size() == 1);
  CHECK(cells(header_only[0]) == round_csv_header({"a", "b"}));

  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 1;
  emit_csv(run_training(cfg, 1), dir.path / "one.csv");
  const std::string text = slurp(dir.path / "one.csv");
  const auto lines = lines_of(text);
  REQUIRE(lines.size() == 2);
  CHECK(cells(lines[1]).size() == cells(lines[0]).size());
  CHECK(cells(lines[1])[0] == "1");
  CHECK(text.find("\r\n") != std::string::npos);
}

TEST_CASE("floats use six significant digits") {
  MetricsLog log;
  log.domain_names = {"d"};
  RoundMetrics r;
  r.round = 1;
  r.average_accuracy = 1.0 / 3.0;
  r.variance_metric = 123456789.0;
  r.domain_accuracy = {0.5};
  r.global_domain_accuracy = {0.25};
  r.domain_prototype_count = {2.0};
  log.rounds.push_back(r);
  std::ostringstream out;
  write_round_csv(log, out);
  const auto row = cells(lines_of(out.str())[1]);
  CHECK(row[1] == "0.333333");
  CHECK(row[3] == "1.23457e+08");
}

TEST_CASE("reruns and repeated seeds give byte-identical files") {
  TempDir dir("protofed_rerun_test");
  ExperimentConfig cfg = tiny_config();
  cfg.seeds = {7};
  run_experiment(cfg, "run", dir.path / "first");
  cfg.parallelism = 4;
  run_experiment(cfg, "run", dir.path / "second");
  CHECK(slurp(dir.path / "first" / "run_seed7.csv") == slurp(dir.path / "second" / "run_seed7.csv"));
  CHECK(slurp(dir.path / "first" / "run_summary.csv") == slurp(dir.path / "second" / "run_summary.csv"));

  cfg.seeds = {7, 7};
  const ExperimentResult twice = run_experiment(cfg, "twice", {});
  REQUIRE(twice.logs.size() == 2);
  std::ostringstream a, b;
  write_round_csv(twice.logs[0], a);
  write_round_csv(twice.logs[1], b);
  CHECK(a.str() == b.str());
  CHECK(twice.summary.average_std == 0.0);
}

TEST_CASE("summary equals a recomputation from the per-round files") {
  TempDir dir("protofed_summary_test");
  ExperimentConfig cfg = tiny_config();
  cfg.seeds = {1, 2, 3};
  const ExperimentResult result = run_experiment(cfg, "s", dir.path);
  std::vector<double> finals;
  std::vector<double> hard;
  for (std::uint64_t seed : cfg.seeds) {
    const auto lines = lines_of(slurp(dir.path / ("s_seed" + std::to_string(seed) + ".csv")));
    const auto header = cells(lines.front());
    const auto last = cells(lines.back());
    const auto col = [&](const std::string& name) {
      return std::stod(last[static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin())]);
    };
    finals.push_back(col("average_accuracy"));
    hard.push_back(col("accuracy_hard"));
  }
  const double mean = (finals[0] + finals[1] + finals[2]) / 3.0;
  double ss = 0.0;
  for (double f : finals) ss += (f - mean) * (f - mean);
  CHECK(result.summary.average_mean == doctest::Approx(mean).epsilon(1e-5));
  CHECK(result.summary.average_std == doctest::Approx(std::sqrt(ss / 2.0)).epsilon(1e-4));
  CHECK(result.summary.domain_mean[3] == doctest::Approx((hard[0] + hard[1] + hard[2]) / 3.0).epsilon(1e-5));
  CHECK(result.summary.seeds == 3);

  const auto summary_lines = lines_of(slurp(dir.path / "s_summary.csv"));
  REQUIRE(summary_lines.size() == 2);
  CHECK(cells(summary_lines[1])[0] == "s");
}

TEST_CASE("sample_std") {
  CHECK(sample_std({}) == 0.0);
  CHECK(sample_std({4.0}) == 0.0);
  CHECK(sample_std({1.0, 3.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("every preset names only existing config keys") {
  for (const auto& name : preset_names()) {
    const auto variants = preset_variants(name);
    CHECK(variants.size() >= 2);
    for (const auto& v : variants) {
      ExperimentConfig c;
      for (const auto& o : v.overrides) CHECK_NOTHROW(apply_override(c, o));
      CHECK_NOTHROW(c.validate());
    }
  }
  CHECK(preset_variants("table3").size() == 4);
  CHECK(preset_variants("table5").size() == 4);
  CHECK(preset_variants("fig4").size() == 5);
  CHECK_THROWS_AS(preset_variants("table99"), std::invalid_argument);
}

TEST_CASE("table3 preset writes one comparison file with four rows") {
  TempDir dir("protofed_preset_test");
  ExperimentConfig cfg = tiny_config();
  cfg.rounds = 1;
  const auto results = run_preset("table3", cfg, dir.path);
  CHECK(results.size() == 4);
  CHECK(results[0].config.local_mode == PrototypeMode::kAverage);
  CHECK(results[3].config.global_mode == PrototypeMode::kCluster);
  const auto lines = lines_of(slurp(dir.path / "table3_comparison.csv"));
  REQUIRE(lines.size() == 5);
  CHECK(cells(lines[1])[0] == "table3_avg_avg");
  CHECK(fs::exists(dir.path / "table3_cluster_cluster_seed1.csv"));
}

TEST_CASE("dataset dump") {
  const ExperimentConfig cfg = tiny_config();
  const FederatedDataset data = build_dataset(cfg, 1);
  std::ostringstream out;
  write_dataset_csv(data, out);
  const auto lines = lines_of(out.str());
  REQUIRE(lines.size() == 1 + 4 * 24 + 4 * 30);
  CHECK(cells(lines[0]).size() == 4 + 6);
  CHECK(cells(lines[1])[0] == "train");
  CHECK(cells(lines.back())[0] == "test");
}
