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

#include "protofed/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace protofed {
namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// RFC 4180 quoting for fields that need it.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << field(cells[i]);
  }
  out << "\r\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

std::vector<std::string> round_csv_header(const std::vector<std::string>& domain_names) {
  std::vector<std::string> h = {"round",
                                "average_accuracy",
                                "global_average_accuracy",
                                "variance_metric",
                                "prototypes_uploaded",
                                "prototypes_downloaded_per_client",
                                "model_scalars_exchanged"};
  for (const auto& d : domain_names) h.push_back("accuracy_" + d);
  for (const auto& d : domain_names) h.push_back("global_accuracy_" + d);
  for (const auto& d : domain_names) h.push_back("local_prototypes_" + d);
  return h;
}

void write_round_csv(const MetricsLog& log, std::ostream& out) {
  write_row(out, round_csv_header(log.domain_names));
  for (const auto& r : log.rounds) {
    std::vector<std::string> cells = {std::to_string(r.round),
                                      g6(r.average_accuracy),
                                      g6(r.global_average_accuracy),
                                      g6(r.variance_metric),
                                      std::to_string(r.prototypes_uploaded),
                                      std::to_string(r.prototypes_downloaded_per_client),
                                      std::to_string(r.model_scalars_exchanged)};
    for (double v : r.domain_accuracy) cells.push_back(g6(v));
    for (double v : r.global_domain_accuracy) cells.push_back(g6(v));
    for (double v : r.domain_prototype_count) cells.push_back(g6(v));
    write_row(out, cells);
  }
}

void emit_csv(const MetricsLog& log, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_round_csv(log, out);
  check_written(out, path);
}

void emit_timing_csv(const MetricsLog& log, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  write_row(out, {"round", "wall_seconds"});
  for (const auto& r : log.rounds) write_row(out, {std::to_string(r.round), g6(r.wall_seconds)});
  check_written(out, path);
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

SeedSummary summarize(const std::string& label, const std::vector<MetricsLog>& logs) {
  SeedSummary s;
  s.label = label;
  s.seeds = logs.size();
  if (logs.empty()) return s;
  s.domain_names = logs.front().domain_names;
  const std::size_t nd = s.domain_names.size();
  std::vector<std::vector<double>> per_domain(nd);
  std::vector<std::vector<double>> proto_counts(nd);
  std::vector<double> avg, variance, down, up;
  for (const auto& log : logs) {
    const RoundMetrics& last = log.rounds.empty() ? log.initial : log.rounds.back();
    for (std::size_t d = 0; d < nd; ++d) {
      per_domain[d].push_back(last.domain_accuracy[d]);
      proto_counts[d].push_back(last.domain_prototype_count[d]);
    }
    avg.push_back(last.average_accuracy);
    variance.push_back(last.variance_metric);
    for (const auto& r : log.rounds) {
      down.push_back(static_cast<double>(r.prototypes_downloaded_per_client));
      up.push_back(static_cast<double>(r.prototypes_uploaded));
    }
  }
  for (std::size_t d = 0; d < nd; ++d) {
    s.domain_mean.push_back(mean(per_domain[d]));
    s.domain_std.push_back(sample_std(per_domain[d]));
    s.domain_prototype_count_mean.push_back(mean(proto_counts[d]));
  }
  s.average_mean = mean(avg);
  s.average_std = sample_std(avg);
  s.variance_metric_mean = mean(variance);
  s.downloaded_per_round_mean = mean(down);
  s.uploaded_per_round_mean = mean(up);
  return s;
}

void write_summary_csv(const std::vector<SeedSummary>& rows, std::ostream& out) {
  std::vector<std::string> header = {"label", "seeds"};
  const std::vector<std::string> names = rows.empty() ? std::vector<std::string>{} : rows.front().domain_names;
  for (const auto& d : names) {
    header.push_back(d + "_mean");
    header.push_back(d + "_std");
  }
  for (const auto& h :
       {"avg_mean", "avg_std", "delta", "variance_metric", "downloaded_per_round", "uploaded_per_round"}) {
    header.push_back(h);
  }
  for (const auto& d : names) header.push_back("local_prototypes_" + d);
  write_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.label, std::to_string(r.seeds)};
    for (std::size_t d = 0; d < r.domain_mean.size(); ++d) {
      cells.push_back(g6(r.domain_mean[d]));
      cells.push_back(g6(r.domain_std[d]));
    }
    cells.push_back(g6(r.average_mean));
    cells.push_back(g6(r.average_std));
    cells.push_back(g6(r.average_mean - rows.front().average_mean));
    cells.push_back(g6(r.variance_metric_mean));
    cells.push_back(g6(r.downloaded_per_round_mean));
    cells.push_back(g6(r.uploaded_per_round_mean));
    for (double v : r.domain_prototype_count_mean) cells.push_back(g6(v));
    write_row(out, cells);
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::string& label,
                                const std::filesystem::path& out_dir) {
  config.validate();
  ExperimentResult result;
  result.label = label;
  result.config = config;
  for (std::uint64_t seed : config.seeds) {
    result.logs.push_back(run_training(config, seed));
    if (!out_dir.empty()) {
      emit_csv(result.logs.back(), out_dir / (label + "_seed" + std::to_string(seed) + ".csv"));
      emit_timing_csv(result.logs.back(), out_dir / "timing" / (label + "_seed" + std::to_string(seed) + ".csv"));
    }
  }
  result.summary = summarize(label, result.logs);
  if (!out_dir.empty()) {
    const auto path = out_dir / (label + "_summary.csv");
    std::ofstream out = open_out(path);
    write_summary_csv({result.summary}, out);
    check_written(out, path);
  }
  return result;
}

std::vector<std::string> preset_names() {
  return {"table3", "table4", "table5", "fig4", "fig5", "appendixC", "appendixD", "appendixE", "appendixF"};
}

std::vector<PresetVariant> preset_variants(const std::string& name) {
  if (name == "table3") {
    return {{"avg_avg", {"local_mode=average", "global_mode=average"}},
            {"avg_cluster", {"local_mode=average", "global_mode=cluster"}},
            {"cluster_avg", {"local_mode=cluster", "global_mode=average"}},
            {"cluster_cluster", {"local_mode=cluster", "global_mode=cluster"}}};
  }
  if (name == "table4") {
    return {{"broadcast", {"local_mode=cluster", "global_mode=cluster", "broadcast_local_prototypes=true"}},
            {"global_clustering", {"local_mode=cluster", "global_mode=cluster", "broadcast_local_prototypes=false"}}};
  }
  if (name == "table5") {
    return {{"none", {"contrast=false", "correction=false"}},
            {"contrast", {"contrast=true", "correction=false"}},
            {"correction", {"contrast=false", "correction=true"}},
            {"both", {"contrast=true", "correction=true"}}};
  }
  if (name == "fig4") {
    std::vector<PresetVariant> v;
    for (const char* a : {"0.125", "0.25", "0.5", "0.75", "1"})
      v.push_back({std::string("alpha_") + a, {std::string("alpha=") + a}});
    return v;
  }
  if (name == "fig5") {
    std::vector<PresetVariant> v;
    for (const char* t : {"0.02", "0.05", "0.07", "0.1", "0.2", "0.5"})
      v.push_back({std::string("tau_") + t, {std::string("tau=") + t}});
    return v;
  }
  if (name == "appendixC") {
    return {{"iid", {"partition=iid"}}, {"dirichlet", {"partition=dirichlet", "dirichlet_alpha=0.5"}}};
  }
  if (name == "appendixD") {
    return {{"finch", {"clustering_backend=finch"}},
            {"kmeans_k2", {"clustering_backend=kmeans", "kmeans_k=2"}},
            {"kmeans_k5", {"clustering_backend=kmeans", "kmeans_k=5"}},
            {"kmeans_adaptive", {"clustering_backend=kmeans_adaptive"}}};
  }
  if (name == "appendixE") {
    const std::vector<std::string> domains = {
        "domain_spreads=0.1,0.8,0.2,0.5,0.4", "domain_names=easy,hard,easy2,medium,medium2",
        "domain_transform_seeds=1,2,3,4,5", "domain_n_train=100,100,100,100,100", "domain_n_test=500,500,500,500,500"};
    auto with = [&domains](std::vector<std::string> extra) {
      std::vector<std::string> v = domains;
      v.insert(v.end(), extra.begin(), extra.end());
      return v;
    };
    return {{"balanced", with({"clients_per_domain=1,1,1,1,1"})},
            {"unbalanced", with({"clients_per_domain=1,4,2,2,1"})}};
  }
  if (name == "appendixF") {
    return {{"no_privacy", {"privacy=false"}},
            {"prototype_noise", {"privacy=true", "privacy_scale=0.05", "privacy_coefficient=0.1"}}};
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::vector<ExperimentResult> run_preset(const std::string& name, const ExperimentConfig& base,
                                         const std::filesystem::path& out_dir) {
  std::vector<ExperimentResult> results;
  std::vector<SeedSummary> rows;
  for (const auto& variant : preset_variants(name)) {
    ExperimentConfig config = base;
    for (const auto& o : variant.overrides) apply_override(config, o);
    config.validate();
    results.push_back(run_experiment(config, name + "_" + variant.label, out_dir));
    rows.push_back(results.back().summary);
  }
  if (!out_dir.empty()) {
    const auto path = out_dir / (name + "_comparison.csv");
    std::ofstream out = open_out(path);
    write_summary_csv(rows, out);
    check_written(out, path);
  }
  return results;
}

void write_dataset_csv(const FederatedDataset& data, std::ostream& out) {
  std::vector<std::string> header = {"split", "client", "domain", "label"};
  for (int d = 0; d < data.input_dim; ++d) header.push_back("x" + std::to_string(d));
  write_row(out, header);
  auto emit = [&](const char* split, int client, int domain, const Sample& s) {
    std::vector<std::string> cells = {split, std::to_string(client), std::to_string(domain), std::to_string(s.y)};
    for (Eigen::Index d = 0; d < s.x.size(); ++d) cells.push_back(g6(s.x[d]));
    write_row(out, cells);
  };
  for (const auto& c : data.clients) {
    for (const auto& s : c.train) emit("train", c.client_id, c.domain_id, s);
  }
  for (std::size_t d = 0; d < data.domain_tests.size(); ++d) {
    for (const auto& s : data.domain_tests[d]) emit("test", -1, data.domains[d].domain_id, s);
  }
}

}  // namespace protofed
