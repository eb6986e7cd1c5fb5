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
#include <span>
#include <vector>

#include "protofed/losses.hpp"
#include "protofed/numerics.hpp"
#include "protofed/prototype_set.hpp"
#include "protofed/rng.hpp"

namespace protofed {

/// y = W x + b, W is out x in.
struct DenseLayer {
  Matrix weights;
  Vector bias;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
           a.bias == b.bias;
  }
};

struct ModelShape {
  int input_dim = 16;
  std::vector<int> hidden_dims = {32};
  int feature_dim = 16;
  int num_classes = 5;

  void validate() const;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Feature extractor h (rectified dense layers, V -> D) followed by a linear
/// classifier f (D -> M). The rectifier follows every extractor layer, so
/// features are component-wise non-negative.
struct ModelParams {
  std::vector<DenseLayer> extractor;
  DenseLayer classifier;

  Eigen::Index input_dim() const { return extractor.front().in_dim(); }
  Eigen::Index feature_dim() const { return extractor.back().out_dim(); }
  Eigen::Index num_classes() const { return classifier.out_dim(); }
  std::size_t parameter_count() const;
  bool same_shape(const ModelParams& other) const;
  /// Throws std::invalid_argument if layer shapes do not chain or values are non-finite.
  void validate() const;

  /// Parameters in a fixed order: extractor layers (weights row-major, then bias), classifier.
  Vector flatten() const;
  /// Inverse of flatten(); keeps this shape.
  void assign_flat(const Vector& flat);

  ModelParams zeros_like() const;
  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double scale);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Same shape as ModelParams; one entry per trainable value.
using GradientSet = ModelParams;

/// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero biases.
ModelParams init_params(const ModelShape& shape, Rng& rng);

struct Sample {
  Vector x;
  int y = 0;
};
using Batch = std::span<const Sample>;

Vector forward_features(const ModelParams& params, const Vector& x);
Vector forward_logits(const ModelParams& params, const Vector& z);
/// argmax of the logits; ties resolve to the lowest class id.
int predict(const ModelParams& params, const Vector& x);

/// Batch mean of lambda * L_alpha + L_CE. An empty prototype set contributes
/// nothing to the prototype term.
double local_loss(Batch batch, const ModelParams& params, const GlobalPrototypeSet& protos, const LossHyper& hyper);

struct LossAndGrad {
  double loss = 0.0;
  GradientSet grads;
};

/// Exact gradient of local_loss with respect to every parameter.
LossAndGrad backward(const ModelParams& params, Batch batch, const GlobalPrototypeSet& protos, const LossHyper& hyper);
LossAndGrad backward(const ModelParams& params, Batch batch, const PrototypeTable& protos, const LossHyper& hyper);

struct OptimizerState {
  double learning_rate = 0.01;
  double momentum = 0.5;
  double weight_decay = 1e-5;
  GradientSet velocity;

  static OptimizerState for_params(const ModelParams& params, double learning_rate, double momentum,
                                   double weight_decay);
};

/// Classical momentum with weight decay folded into the gradient:
///   v <- mu v + g + wd theta;  theta <- theta - lr v
void sgd_step(ModelParams& params, OptimizerState& opt, const GradientSet& grads);

struct WeightedParams {
  const ModelParams* params = nullptr;
  double sample_count = 0.0;
};

/// sum_k (N_k / N) w_k over the uploads.
ModelParams aggregate_params(std::span<const WeightedParams> uploads);

}  // namespace protofed
