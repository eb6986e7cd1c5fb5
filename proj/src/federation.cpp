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

#include "protofed/federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace protofed {
namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is handled
// by exactly one thread and writes only its own slot.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
      pool.emplace_back([&]() {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

FeaturesByClass features_by_class(const ModelParams& model, std::span<const Sample> samples) {
  FeaturesByClass out;
  for (const auto& s : samples) out[s.y].push_back(forward_features(model, s.x));
  return out;
}

double mean_class_count(const LocalPrototypeSet& set) {
  if (set.by_class.empty()) return 0.0;
  return static_cast<double>(set.total()) / static_cast<double>(set.by_class.size());
}

}  // namespace

LocalUpdateOptions LocalUpdateOptions::from(const ExperimentConfig& config) {
  LocalUpdateOptions o;
  o.epochs = config.local_epochs;
  o.batch_size = config.batch_size;
  o.hyper = config.loss;
  o.local_mode = config.local_mode;
  o.cluster = ClusterOptions{config.clustering_backend, config.kmeans_k};
  o.privacy = config.privacy;
  o.learning_rate = config.learning_rate;
  o.momentum = config.momentum;
  o.weight_decay = config.weight_decay;
  return o;
}

ServerOptions ServerOptions::from(const ExperimentConfig& config) {
  ServerOptions o;
  o.global.mode = config.global_mode;
  o.global.cluster = ClusterOptions{config.clustering_backend, config.kmeans_k};
  o.global.member_weighted_average = config.member_weighted_average;
  o.broadcast_local_prototypes = config.broadcast_local_prototypes;
  return o;
}

double accuracy(const ModelParams& params, std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    if (predict(params, s.x) == s.y) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

UploadMessage local_update(ClientState& client, const DownloadMessage& download, const LocalUpdateOptions& options) {
  if (options.epochs < 1) throw std::invalid_argument("local_update: epochs must be >= 1");
  if (options.batch_size < 1) throw std::invalid_argument("local_update: batch_size must be >= 1");
  if (client.train.empty()) throw std::invalid_argument("local_update: client has no training data");

  client.model = download.params;
  client.optimizer =
      OptimizerState::for_params(client.model, options.learning_rate, options.momentum, options.weight_decay);
  const PrototypeTable table(download.prototypes);
  const std::size_t n = client.train.size();
  const auto batch = static_cast<std::size_t>(options.batch_size);
  std::vector<std::size_t> order(n);
  std::vector<Sample> batch_samples;
  batch_samples.reserve(batch);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    client.rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      batch_samples.clear();
      for (std::size_t i = start; i < std::min(n, start + batch); ++i) batch_samples.push_back(client.train[order[i]]);
      const LossAndGrad lg = backward(client.model, batch_samples, table, options.hyper);
      sgd_step(client.model, client.optimizer, lg.grads);
    }
  }

  LocalPrototypeSet protos = compute_local_prototypes(client.client_id, features_by_class(client.model, client.train),
                                                      options.local_mode, options.cluster, client.rng);
  if (options.privacy.enabled) protos = perturb_prototypes(protos, options.privacy, client.rng);
  return UploadMessage{client.client_id, client.model, std::move(protos), n};
}

DownloadMessage server_round(ServerState& server, std::vector<UploadMessage> uploads) {
  if (uploads.empty()) throw std::invalid_argument("server_round: no uploads");
  std::sort(uploads.begin(), uploads.end(),
            [](const UploadMessage& a, const UploadMessage& b) { return a.client_id < b.client_id; });

  std::vector<WeightedParams> weighted;
  std::vector<LocalPrototypeSet> locals;
  weighted.reserve(uploads.size());
  locals.reserve(uploads.size());
  CommRecord record;
  record.round = server.round + 1;
  for (const auto& u : uploads) {
    if (!u.params.same_shape(uploads.front().params)) throw std::invalid_argument("server_round: model shape mismatch");
    for (const auto& [cls, protos] : u.prototypes.by_class) {
      for (const auto& p : protos) {
        if (p.vector.size() != u.params.feature_dim()) {
          throw std::invalid_argument("server_round: prototype dim does not match feature dim");
        }
      }
    }
    weighted.push_back(WeightedParams{&u.params, static_cast<double>(u.sample_count)});
    locals.push_back(u.prototypes);
    record.uploading_clients.push_back(u.client_id);
    record.prototypes_uploaded.push_back(u.prototypes.total());
    record.prototypes_uploaded_total += u.prototypes.total();
  }

  GlobalPrototypeSet global = server.options.broadcast_local_prototypes
                                  ? pool_local_prototypes(locals, record.round)
                                  : compute_global_prototypes(locals, server.options.global, server.rng, record.round);

  server.global_model = aggregate_params(weighted);
  server.prototypes = global;
  server.round = record.round;

  record.prototypes_downloaded_per_client = global.total();
  record.model_scalars_exchanged = 2 * uploads.size() * server.global_model.parameter_count();
  server.ledger.records.push_back(std::move(record));
  return DownloadMessage{server.global_model, std::move(global)};
}

double compute_variance_metric(const std::map<int, std::vector<Vector>>& normalized_features_by_class) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [cls, feats] : normalized_features_by_class) {
    if (feats.empty()) continue;
    const Vector center = mean_of(feats);
    for (const auto& f : feats) total += (f - center).norm();
    count += feats.size();
  }
  if (count == 0) throw std::invalid_argument("compute_variance_metric: no features");
  return total / static_cast<double>(count);
}

FederatedDataset build_dataset(const ExperimentConfig& config, std::uint64_t seed) {
  Rng data_rng = Rng(seed).fork(11);
  return generate_domains(config.shape.num_classes, config.shape.input_dim, config.domains, config.clients_per_domain,
                          config.partition, data_rng);
}

MetricsLog run_training(const ExperimentConfig& config) { return run_training(config, config.seeds.front()); }

MetricsLog run_training(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const Rng root(seed);

  const FederatedDataset data = build_dataset(config, seed);
  Rng init_rng = root.fork(12);
  const ModelParams initial = init_params(config.shape, init_rng);

  const std::size_t num_domains = data.domains.size();
  std::vector<ClientState> clients;
  std::vector<std::size_t> client_domain;
  for (const auto& cd : data.clients) {
    ClientState c;
    c.client_id = cd.client_id;
    c.domain_id = cd.domain_id;
    c.train = cd.train;
    c.model = initial;
    c.optimizer = OptimizerState::for_params(initial, config.learning_rate, config.momentum, config.weight_decay);
    c.rng = root.fork(100 + static_cast<std::uint64_t>(cd.client_id));
    clients.push_back(std::move(c));
    for (std::size_t d = 0; d < num_domains; ++d) {
      if (data.domains[d].domain_id == cd.domain_id) client_domain.push_back(d);
    }
  }

  ServerState server;
  server.global_model = initial;
  server.options = ServerOptions::from(config);
  server.rng = root.fork(13);
  const LocalUpdateOptions local_options = LocalUpdateOptions::from(config);

  MetricsLog log;
  log.seed = seed;
  for (const auto& d : data.domains) log.domain_names.push_back(d.name);

  std::vector<LocalPrototypeSet> last_protos(clients.size());
  auto evaluate = [&](int round) {
    RoundMetrics m;
    m.round = round;
    std::vector<double> client_acc(clients.size());
    parallel_for(clients.size(), config.parallelism, [&](std::size_t k) {
      client_acc[k] = accuracy(clients[k].model, data.domain_tests[client_domain[k]]);
    });
    m.domain_accuracy.assign(num_domains, 0.0);
    m.domain_prototype_count.assign(num_domains, 0.0);
    std::vector<int> per_domain(num_domains, 0);
    for (std::size_t k = 0; k < clients.size(); ++k) {
      m.domain_accuracy[client_domain[k]] += client_acc[k];
      m.domain_prototype_count[client_domain[k]] += mean_class_count(last_protos[k]);
      ++per_domain[client_domain[k]];
      m.average_accuracy += client_acc[k];
    }
    m.average_accuracy /= static_cast<double>(clients.size());
    for (std::size_t d = 0; d < num_domains; ++d) {
      m.domain_accuracy[d] /= per_domain[d];
      m.domain_prototype_count[d] /= per_domain[d];
    }

    std::map<int, std::vector<Vector>> normalized;
    for (std::size_t d = 0; d < num_domains; ++d) {
      const double acc = accuracy(server.global_model, data.domain_tests[d]);
      m.global_domain_accuracy.push_back(acc);
      m.global_average_accuracy += acc / static_cast<double>(num_domains);
      for (const auto& s : data.domain_tests[d]) {
        normalized[s.y].push_back(normalize(forward_features(server.global_model, s.x)));
      }
    }
    m.variance_metric = compute_variance_metric(normalized);
    return m;
  };

  log.initial = evaluate(0);
  DownloadMessage download{initial, GlobalPrototypeSet{}};
  const std::size_t num_clients = clients.size();
  for (int t = 1; t <= config.rounds; ++t) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::size_t> participants(num_clients);
    std::iota(participants.begin(), participants.end(), std::size_t{0});
    if (config.participation < 1.0) {
      const auto take = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(config.participation * static_cast<double>(num_clients))));
      Rng pick = root.fork(20000 + static_cast<std::uint64_t>(t));
      pick.shuffle(participants);
      participants.resize(std::min(take, num_clients));
      std::sort(participants.begin(), participants.end());
    }

    std::vector<UploadMessage> uploads(participants.size());
    parallel_for(participants.size(), config.parallelism,
                 [&](std::size_t i) { uploads[i] = local_update(clients[participants[i]], download, local_options); });
    for (std::size_t i = 0; i < participants.size(); ++i) last_protos[participants[i]] = uploads[i].prototypes;

    download = server_round(server, std::move(uploads));

    RoundMetrics m = evaluate(t);
    const CommRecord& rec = server.ledger.records.back();
    m.prototypes_uploaded = rec.prototypes_uploaded_total;
    m.prototypes_downloaded_per_client = rec.prototypes_downloaded_per_client;
    m.model_scalars_exchanged = rec.model_scalars_exchanged;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.rounds.push_back(std::move(m));
  }
  log.ledger = server.ledger;
  return log;
}

}  // namespace protofed
