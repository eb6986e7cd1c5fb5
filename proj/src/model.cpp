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

#include "protofed/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace protofed {
namespace {

DenseLayer make_layer(int in, int out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-a, a);
  }
  return layer;
}

bool same_layer_shape(const DenseLayer& a, const DenseLayer& b) {
  return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() && a.bias.size() == b.bias.size();
}

template <typename Fn>
void for_each_layer(ModelParams& p, Fn&& fn) {
  for (auto& layer : p.extractor) fn(layer);
  fn(p.classifier);
}

template <typename Fn>
void for_each_layer_pair(ModelParams& a, const ModelParams& b, Fn&& fn) {
  for (std::size_t i = 0; i < a.extractor.size(); ++i) fn(a.extractor[i], b.extractor[i]);
  fn(a.classifier, b.classifier);
}

void require_same_shape(const ModelParams& a, const ModelParams& b, const char* what) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": parameter shape mismatch");
}

struct ForwardTrace {
  std::vector<Vector> activations;  // a_0 = x, a_l = relu(u_l)
  std::vector<Vector> pre;          // u_l
};

ForwardTrace trace_features(const ModelParams& params, const Vector& x) {
  ForwardTrace t;
  t.activations.reserve(params.extractor.size() + 1);
  t.pre.reserve(params.extractor.size());
  t.activations.push_back(x);
  for (const auto& layer : params.extractor) {
    t.pre.push_back(layer.weights * t.activations.back() + layer.bias);
    t.activations.push_back(t.pre.back().cwiseMax(0.0));
  }
  return t;
}

void require_input(const ModelParams& params, const Vector& x) {
  if (x.size() != params.input_dim()) {
    throw std::invalid_argument("forward_features: input dim " + std::to_string(x.size()) +
                                " != " + std::to_string(params.input_dim()));
  }
}

}  // namespace

void ModelShape::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("hidden_dims entries must be >= 1");
  }
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : extractor) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  n += static_cast<std::size_t>(classifier.weights.size() + classifier.bias.size());
  return n;
}

bool ModelParams::same_shape(const ModelParams& other) const {
  if (extractor.size() != other.extractor.size()) return false;
  for (std::size_t i = 0; i < extractor.size(); ++i) {
    if (!same_layer_shape(extractor[i], other.extractor[i])) return false;
  }
  return same_layer_shape(classifier, other.classifier);
}

void ModelParams::validate() const {
  if (extractor.empty()) throw std::invalid_argument("ModelParams: extractor has no layers");
  Eigen::Index in = extractor.front().in_dim();
  auto check = [&in](const DenseLayer& layer, const char* name) {
    if (layer.in_dim() != in || layer.bias.size() != layer.out_dim()) {
      throw std::invalid_argument(std::string("ModelParams: ") + name + " layer shapes do not chain");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw std::invalid_argument(std::string("ModelParams: non-finite values in ") + name);
    }
    in = layer.out_dim();
  };
  for (const auto& layer : extractor) check(layer, "extractor");
  check(classifier, "classifier");
}

Vector ModelParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index off = 0;
  auto put = [&](const DenseLayer& layer) {
    flat.segment(off, layer.weights.size()) = Eigen::Map<const Vector>(layer.weights.data(), layer.weights.size());
    off += layer.weights.size();
    flat.segment(off, layer.bias.size()) = layer.bias;
    off += layer.bias.size();
  };
  for (const auto& layer : extractor) put(layer);
  put(classifier);
  return flat;
}

void ModelParams::assign_flat(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw std::invalid_argument("assign_flat: size mismatch");
  }
  Eigen::Index off = 0;
  for_each_layer(*this, [&](DenseLayer& layer) {
    Eigen::Map<Vector>(layer.weights.data(), layer.weights.size()) = flat.segment(off, layer.weights.size());
    off += layer.weights.size();
    layer.bias = flat.segment(off, layer.bias.size());
    off += layer.bias.size();
  });
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for_each_layer(z, [](DenseLayer& layer) {
    layer.weights.setZero();
    layer.bias.setZero();
  });
  return z;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  require_same_shape(*this, other, "ModelParams::operator+=");
  for_each_layer_pair(*this, other, [](DenseLayer& a, const DenseLayer& b) {
    a.weights += b.weights;
    a.bias += b.bias;
  });
  return *this;
}

ModelParams& ModelParams::operator*=(double scale) {
  for_each_layer(*this, [scale](DenseLayer& layer) {
    layer.weights *= scale;
    layer.bias *= scale;
  });
  return *this;
}

ModelParams init_params(const ModelShape& shape, Rng& rng) {
  shape.validate();
  ModelParams p;
  int in = shape.input_dim;
  for (int h : shape.hidden_dims) {
    p.extractor.push_back(make_layer(in, h, rng));
    in = h;
  }
  p.extractor.push_back(make_layer(in, shape.feature_dim, rng));
  p.classifier = make_layer(shape.feature_dim, shape.num_classes, rng);
  return p;
}

Vector forward_features(const ModelParams& params, const Vector& x) {
  require_input(params, x);
  Vector a = x;
  for (const auto& layer : params.extractor) a = (layer.weights * a + layer.bias).cwiseMax(0.0);
  return a;
}

Vector forward_logits(const ModelParams& params, const Vector& z) {
  if (z.size() != params.feature_dim()) {
    throw std::invalid_argument("forward_logits: feature dim " + std::to_string(z.size()) +
                                " != " + std::to_string(params.feature_dim()));
  }
  return params.classifier.weights * z + params.classifier.bias;
}

int predict(const ModelParams& params, const Vector& x) {
  const Vector logits = forward_logits(params, forward_features(params, x));
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<int>(best);
}

double local_loss(Batch batch, const ModelParams& params, const GlobalPrototypeSet& protos, const LossHyper& hyper) {
  if (batch.empty()) throw std::invalid_argument("local_loss: empty batch");
  const PrototypeTable table(protos);
  double total = 0.0;
  for (const auto& sample : batch) {
    const Vector z = forward_features(params, sample.x);
    double value = cross_entropy(forward_logits(params, z), sample.y);
    if (!table.empty() && hyper.lambda != 0.0 && table.count(sample.y) > 0)
      value += hyper.lambda * alpha_sparsity_loss(z, sample.y, table, hyper);
    total += value;
  }
  return total / static_cast<double>(batch.size());
}

LossAndGrad backward(const ModelParams& params, Batch batch, const GlobalPrototypeSet& protos, const LossHyper& hyper) {
  return backward(params, batch, PrototypeTable(protos), hyper);
}

LossAndGrad backward(const ModelParams& params, Batch batch, const PrototypeTable& protos, const LossHyper& hyper) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  if (!protos.empty() && protos.dim() != params.feature_dim()) {
    throw std::invalid_argument("backward: prototype dim does not match feature dim");
  }
  LossAndGrad out{0.0, params.zeros_like()};
  const bool use_protos = !protos.empty() && hyper.lambda != 0.0;
  const std::size_t depth = params.extractor.size();

  for (const auto& sample : batch) {
    require_input(params, sample.x);
    const ForwardTrace t = trace_features(params, sample.x);
    const Vector& z = t.activations.back();
    const Vector logits = forward_logits(params, z);
    out.loss += cross_entropy(logits, sample.y);

    const double lse = log_sum_exp(logits);
    Vector dlogits = (logits.array() - lse).exp().matrix();
    dlogits[sample.y] -= 1.0;
    out.grads.classifier.weights.noalias() += dlogits * z.transpose();
    out.grads.classifier.bias += dlogits;

    Vector dz = params.classifier.weights.transpose() * dlogits;
    // Samples whose class has no prototype skip the prototype term.
    if (use_protos && protos.count(sample.y) > 0) {
      out.loss += hyper.lambda * alpha_sparsity_loss(z, sample.y, protos, hyper);
      dz += loss_grad_z(z, sample.y, protos, hyper);
    }
    for (std::size_t l = depth; l-- > 0;) {
      const Vector du = dz.cwiseProduct((t.pre[l].array() > 0.0).cast<double>().matrix());
      out.grads.extractor[l].weights.noalias() += du * t.activations[l].transpose();
      out.grads.extractor[l].bias += du;
      if (l > 0) dz = params.extractor[l].weights.transpose() * du;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  out.grads *= inv;
  return out;
}

OptimizerState OptimizerState::for_params(const ModelParams& params, double learning_rate, double momentum,
                                          double weight_decay) {
  return OptimizerState{learning_rate, momentum, weight_decay, params.zeros_like()};
}

void sgd_step(ModelParams& params, OptimizerState& opt, const GradientSet& grads) {
  require_same_shape(params, grads, "sgd_step");
  require_same_shape(params, opt.velocity, "sgd_step (velocity)");
  auto update = [&opt](auto& theta, auto& v, const auto& g) {
    v = opt.momentum * v + g + opt.weight_decay * theta;
    theta -= opt.learning_rate * v;
  };
  for (std::size_t i = 0; i < params.extractor.size(); ++i) {
    update(params.extractor[i].weights, opt.velocity.extractor[i].weights, grads.extractor[i].weights);
    update(params.extractor[i].bias, opt.velocity.extractor[i].bias, grads.extractor[i].bias);
  }
  update(params.classifier.weights, opt.velocity.classifier.weights, grads.classifier.weights);
  update(params.classifier.bias, opt.velocity.classifier.bias, grads.classifier.bias);
}

ModelParams aggregate_params(std::span<const WeightedParams> uploads) {
  if (uploads.empty()) throw std::invalid_argument("aggregate_params: no uploads");
  double total = 0.0;
  for (const auto& u : uploads) {
    if (!(u.sample_count > 0.0)) throw std::invalid_argument("aggregate_params: sample counts must be > 0");
    require_same_shape(*uploads.front().params, *u.params, "aggregate_params");
    total += u.sample_count;
  }
  ModelParams acc = uploads.front().params->zeros_like();
  for (const auto& u : uploads) {
    ModelParams scaled = *u.params;
    scaled *= u.sample_count / total;
    acc += scaled;
  }
  return acc;
}

}  // namespace protofed
