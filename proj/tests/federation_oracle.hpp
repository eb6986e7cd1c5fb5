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

#include <algorithm>
#include <numeric>
#include <vector>

#include "protofed/federation.hpp"

namespace protofed::testing {

/// Client `id` exactly as run_training would construct it for `seed`.
inline ClientState make_client(const ExperimentConfig& cfg, std::uint64_t seed, int id = 0) {
  const FederatedDataset data = build_dataset(cfg, seed);
  ClientState c;
  c.client_id = data.clients[static_cast<std::size_t>(id)].client_id;
  c.domain_id = data.clients[static_cast<std::size_t>(id)].domain_id;
  c.train = data.clients[static_cast<std::size_t>(id)].train;
  Rng init(seed);
  Rng init_rng = init.fork(12);
  c.model = init_params(cfg.shape, init_rng);
  c.rng = Rng(seed).fork(100 + static_cast<std::uint64_t>(id));
  return c;
}

/// E epochs of shuffled mini-batch SGD on cross-entropy alone, written against the model module.
inline ModelParams standalone_sgd(ModelParams params, const std::vector<Sample>& train, const ExperimentConfig& cfg,
                                  Rng rng) {
  auto opt = OptimizerState::for_params(params, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
  LossHyper no_proto = cfg.loss;
  no_proto.lambda = 0.0;
  std::vector<std::size_t> order(train.size());
  for (int e = 0; e < cfg.local_epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<Sample> batch;
      for (std::size_t i = start; i < std::min(train.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i) {
        batch.push_back(train[order[i]]);
      }
      sgd_step(params, opt, backward(params, batch, GlobalPrototypeSet{}, no_proto).grads);
    }
  }
  return params;
}

}  // namespace protofed::testing
