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

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "protofed/config.hpp"
#include "protofed/datagen.hpp"
#include "protofed/model.hpp"
#include "protofed/prototype_set.hpp"
#include "protofed/prototypes.hpp"
#include "protofed/rng.hpp"

namespace protofed {

struct ClientState {
  int client_id = 0;
  int domain_id = 0;
  std::vector<Sample> train;
  ModelParams model;
  OptimizerState optimizer;
  Rng rng{0};

  std::size_t sample_count() const { return train.size(); }
};

struct UploadMessage {
  int client_id = 0;
  ModelParams params;
  LocalPrototypeSet prototypes;
  std::size_t sample_count = 0;

  friend bool operator==(const UploadMessage&, const UploadMessage&) = default;
};

struct DownloadMessage {
  ModelParams params;
  GlobalPrototypeSet prototypes;
};

/// Settings a client needs for one local update.
struct LocalUpdateOptions {
  int epochs = 2;
  int batch_size = 32;
  LossHyper hyper;
  PrototypeMode local_mode = PrototypeMode::kCluster;
  ClusterOptions cluster;
  PrivacyConfig privacy;
  double learning_rate = 0.01;
  double momentum = 0.5;
  double weight_decay = 1e-5;

  static LocalUpdateOptions from(const ExperimentConfig& config);
};

/// Settings the server needs to aggregate one round.
struct ServerOptions {
  GlobalOptions global;
  bool broadcast_local_prototypes = false;

  static ServerOptions from(const ExperimentConfig& config);
};

struct CommRecord {
  int round = 0;
  /// Indexed by position in the round's (client-id sorted) upload list.
  std::vector<int> uploading_clients;
  std::vector<std::size_t> prototypes_uploaded;
  std::size_t prototypes_uploaded_total = 0;
  /// Prototypes each client receives for the next round (same for every client).
  std::size_t prototypes_downloaded_per_client = 0;
  std::size_t model_scalars_exchanged = 0;
};

struct CommLedger {
  std::vector<CommRecord> records;
};

struct ServerState {
  ModelParams global_model;
  GlobalPrototypeSet prototypes;
  int round = 0;
  ServerOptions options;
  Rng rng{0};
  CommLedger ledger;
};

/// One client round: adopt the downloaded model, run `epochs` of mini-batch SGD
/// on the local loss, then rebuild (and optionally perturb) local prototypes
/// from the updated model. An empty prototype download disables the prototype term.
UploadMessage local_update(ClientState& client, const DownloadMessage& download, const LocalUpdateOptions& options);

/// Builds the next global prototypes and aggregates models weighted by sample count.
/// Uploads are reduced in client-id order regardless of arrival order.
DownloadMessage server_round(ServerState& server, std::vector<UploadMessage> uploads);

/// Mean over samples of the distance between each unit-normalised feature and
/// the mean of its class's unit-normalised features.
double compute_variance_metric(const std::map<int, std::vector<Vector>>& normalized_features_by_class);

struct RoundMetrics {
  int round = 0;
  /// Mean accuracy of each domain's clients, their own post-update models on the domain test set.
  std::vector<double> domain_accuracy;
  /// Mean over all clients of their own test accuracy.
  double average_accuracy = 0.0;
  /// Aggregated global model on each domain test set.
  std::vector<double> global_domain_accuracy;
  double global_average_accuracy = 0.0;
  /// Feature spread of the aggregated model over all domain test sets.
  double variance_metric = 0.0;
  /// Mean over a domain's clients of the mean per-class local prototype count.
  std::vector<double> domain_prototype_count;
  std::size_t prototypes_uploaded = 0;
  std::size_t prototypes_downloaded_per_client = 0;
  std::size_t model_scalars_exchanged = 0;
  double wall_seconds = 0.0;
};

struct MetricsLog {
  std::uint64_t seed = 0;
  std::vector<std::string> domain_names;
  /// Evaluation of the initial model before any round.
  RoundMetrics initial;
  std::vector<RoundMetrics> rounds;
  CommLedger ledger;
};

/// The dataset run_training uses for `seed`.
FederatedDataset build_dataset(const ExperimentConfig& config, std::uint64_t seed);

/// Builds the dataset and clients for `seed` and runs `config.rounds` rounds.
MetricsLog run_training(const ExperimentConfig& config, std::uint64_t seed);
MetricsLog run_training(const ExperimentConfig& config);

/// Fraction of samples whose predicted class matches the label.
double accuracy(const ModelParams& params, std::span<const Sample> samples);

}  // namespace protofed
