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

#include <CLI11.hpp>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "protofed/config.hpp"
#include "protofed/experiment.hpp"
#include "protofed/federation.hpp"

namespace {

protofed::ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  protofed::ExperimentConfig config = path.empty() ? protofed::ExperimentConfig{} : protofed::parse_config(path);
  for (const auto& o : overrides) protofed::apply_override(config, o);
  config.validate();
  return config;
}

void print_summary(const protofed::SeedSummary& s) {
  std::cout << s.label << ": avg " << 100.0 * s.average_mean << " +- " << 100.0 * s.average_std << " over " << s.seeds
            << " seed(s)";
  for (std::size_t d = 0; d < s.domain_names.size(); ++d) {
    std::cout << "  " << s.domain_names[d] << " " << 100.0 * s.domain_mean[d];
  }
  std::cout << "  variance " << s.variance_metric_mean << "  downloaded/round " << s.downloaded_per_round_mean << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prototype-based federated learning simulator"};
  app.require_subcommand(1);
  std::vector<std::string> overrides;
  app.add_option("--set", overrides, "Override a config key (key=value); repeatable");

  std::string config_path;
  std::string out_dir = "results";
  std::string label = "run";
  auto* run = app.add_subcommand("run", "Run one configuration over its seeds");
  run->add_option("config", config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--label", label, "Prefix for output files");

  std::string preset;
  auto* pre = app.add_subcommand("preset", "Run a named comparison preset");
  pre->add_option("name", preset, "Preset name")->required()->check(CLI::IsMember(protofed::preset_names()));
  pre->add_option("--config", config_path, "Base config file")->check(CLI::ExistingFile);
  pre->add_option("--out", out_dir, "Output directory");

  auto* val = app.add_subcommand("validate", "Parse and validate a config, then print it");
  val->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  std::string dataset_out;
  std::uint64_t dataset_seed = 0;
  auto* dump = app.add_subcommand("dump-dataset", "Write the generated dataset as CSV");
  dump->add_option("config", config_path, "Config file")->check(CLI::ExistingFile);
  dump->add_option("--seed", dataset_seed, "Seed (default: first configured seed)");
  dump->add_option("-o,--output", dataset_out, "Output file (default: stdout)");

  app.add_subcommand("presets", "List preset names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("presets")) {
      for (const auto& n : protofed::preset_names()) std::cout << n << "\n";
      return 0;
    }
    const protofed::ExperimentConfig config = load(config_path, overrides);
    if (*val) {
      std::cout << protofed::serialize_config(config);
    } else if (*run) {
      print_summary(protofed::run_experiment(config, label, out_dir).summary);
    } else if (*pre) {
      for (const auto& r : protofed::run_preset(preset, config, out_dir)) print_summary(r.summary);
      std::cout << "wrote " << out_dir << "/" << preset << "_comparison.csv\n";
    } else if (*dump) {
      const std::uint64_t seed = dump->count("--seed") ? dataset_seed : config.seeds.front();
      const auto data = protofed::build_dataset(config, seed);
      if (dataset_out.empty()) {
        protofed::write_dataset_csv(data, std::cout);
      } else {
        std::ofstream out(dataset_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + dataset_out + "'");
        protofed::write_dataset_csv(data, out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
