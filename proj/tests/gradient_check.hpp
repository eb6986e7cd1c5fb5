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
#include <cmath>
#include <vector>

#include "protofed/model.hpp"
#include "protofed/rng.hpp"

namespace protofed::testing {

/// Floor on the relative-error denominator.
inline constexpr double kRelativeFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kRelativeFloor});
}

struct GradientInstance {
  ModelParams params;
  std::vector<Sample> batch;
  GlobalPrototypeSet protos;
};

/// Random V=6, D=5, M=3 instance with `per_class` non-negative prototypes per class.
inline GradientInstance random_gradient_instance(std::uint64_t seed, int batch_size = 4, int per_class = 2) {
  Rng rng(seed);
  ModelShape shape;
  shape.input_dim = 6;
  shape.hidden_dims = {8};
  shape.feature_dim = 5;
  shape.num_classes = 3;
  GradientInstance inst;
  inst.params = init_params(shape, rng);
  for (auto& layer : inst.params.extractor) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.uniform(0.0, 0.3);
  }
  for (int i = 0; i < batch_size; ++i) {
    Sample s;
    s.x = Vector(6);
    for (int d = 0; d < 6; ++d) s.x[d] = rng.normal();
    s.y = static_cast<int>(rng.uniform_index(3));
    inst.batch.push_back(s);
  }
  for (int c = 0; c < 3; ++c) {
    for (int j = 0; j < per_class; ++j) {
      Vector g(5);
      for (int d = 0; d < 5; ++d) g[d] = rng.uniform(0.0, 1.0);
      inst.protos.by_class[c].push_back(Prototype{c, g, 1});
    }
  }
  return inst;
}

/// Largest relative error between backward() and central differences of local_loss.
inline double max_gradient_error(const GradientInstance& inst, const LossHyper& hyper, double step = 1e-5) {
  const LossAndGrad lg = backward(inst.params, inst.batch, inst.protos, hyper);
  const Vector analytic = lg.grads.flatten();
  const Vector theta = inst.params.flatten();
  ModelParams probe = inst.params;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector t = theta;
    t[i] = theta[i] + step;
    probe.assign_flat(t);
    const double up = local_loss(inst.batch, probe, inst.protos, hyper);
    t[i] = theta[i] - step;
    probe.assign_flat(t);
    const double down = local_loss(inst.batch, probe, inst.protos, hyper);
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2 * step)));
  }
  return worst;
}

}  // namespace protofed::testing
