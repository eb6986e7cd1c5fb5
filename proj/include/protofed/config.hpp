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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "protofed/datagen.hpp"
#include "protofed/losses.hpp"
#include "protofed/model.hpp"
#include "protofed/prototypes.hpp"

namespace protofed {

/// Full description of one experiment. Defaults follow the reference training
/// recipe (SGD lr 0.01, momentum 0.5, weight decay 1e-5, E = 2, batch 32,
/// tau 0.07, alpha 0.25, lambda 100) on the desk-scale synthetic scenario.
struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {1};
  int rounds = 50;
  int local_epochs = 2;
  int batch_size = 32;
  ModelShape shape;

  double learning_rate = 0.01;
  double momentum = 0.5;
  double weight_decay = 1e-5;
  LossHyper loss;

  PrototypeMode local_mode = PrototypeMode::kCluster;
  PrototypeMode global_mode = PrototypeMode::kCluster;
  /// Forward every local prototype instead of aggregating on the server.
  bool broadcast_local_prototypes = false;
  ClusterBackend clustering_backend = ClusterBackend::kFinch;
  int kmeans_k = 2;
  bool member_weighted_average = false;

  PrivacyConfig privacy;
  /// Accepted by the parser only to be rejected: model-parameter DP is not implemented.
  bool dp_sgd = false;

  PartitionSpec partition;
  std::vector<DomainSpec> domains;
  std::vector<int> clients_per_domain;

  /// Fraction of clients sampled per round.
  double participation = 1.0;
  /// Worker threads for client updates; results do not depend on it.
  int parallelism = 1;

  ExperimentConfig();

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;
  int num_clients() const;
};

/// Default four-domain scenario: spreads {0.1, 0.3, 0.5, 0.8}, 100 train and
/// 500 test samples per domain, one client per domain.
std::vector<DomainSpec> default_domains();

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and invalid
/// values raise std::invalid_argument naming the key. Omitted keys keep defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Applies one `key=value` override on top of an existing config.
void apply_override(ExperimentConfig& config, const std::string& assignment);
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Every key with its value, in a fixed order; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace protofed
