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
#include <vector>

#include "gradient_check.hpp"
#include "protofed/losses.hpp"
#include "protofed/model.hpp"

using namespace protofed;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Scalar model: one 1x1 extractor layer and a 1x1 classifier.
ModelParams scalar_params(double w) {
  ModelParams p;
  p.extractor.push_back(DenseLayer{Matrix::Constant(1, 1, w), Vector::Zero(1)});
  p.classifier = DenseLayer{Matrix::Constant(1, 1, w), Vector::Zero(1)};
  return p;
}

ModelShape small_shape() {
  ModelShape s;
  s.input_dim = 4;
  s.hidden_dims = {6};
  s.feature_dim = 3;
  s.num_classes = 3;
  return s;
}

}  // namespace

TEST_CASE("init_params shapes and Glorot bound") {
  Rng rng(1);
  const ModelParams p = init_params(ModelShape{}, rng);
  CHECK(p.input_dim() == 16);
  CHECK(p.feature_dim() == 16);
  CHECK(p.num_classes() == 5);
  CHECK(p.extractor.size() == 2);
  CHECK(p.parameter_count() == 16 * 32 + 32 + 32 * 16 + 16 + 16 * 5 + 5);
  const double a = std::sqrt(6.0 / (16 + 32));
  CHECK(p.extractor[0].weights.cwiseAbs().maxCoeff() <= a);
  CHECK(p.extractor[0].bias.isZero());
  ModelShape bad;
  bad.num_classes = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward_features examples") {
  Rng rng(2);
  ModelParams zero = init_params(small_shape(), rng).zeros_like();
  CHECK(forward_features(zero, vec({1, -2, 3, 4})).isZero());

  ModelParams id;
  id.extractor.push_back(DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2)});
  id.classifier = DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2)};
  CHECK(forward_features(id, vec({1, -1})) == vec({1, 0}));
  CHECK_THROWS_AS(forward_features(id, vec({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("features are non-negative and finite") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams p = init_params(small_shape(), rng);
    Vector x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.normal(0.0, 3.0);
    const Vector z = forward_features(p, x);
    CHECK(all_finite(z));
    CHECK(z.minCoeff() >= 0.0);
  }
}

TEST_CASE("forward_features agrees with direct matrix arithmetic") {
  Rng rng(4);
  const ModelParams p = init_params(small_shape(), rng);
  Vector x(4);
  for (int i = 0; i < 4; ++i) x[i] = rng.normal();
  Vector h = x;
  for (const auto& layer : p.extractor) {
    Vector next(layer.weights.rows());
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      double acc = layer.bias[r];
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) acc += layer.weights(r, c) * h[c];
      next[r] = acc > 0 ? acc : 0.0;
    }
    h = next;
  }
  CHECK(forward_features(p, x).isApprox(h, 1e-14));
}

TEST_CASE("forward_logits examples") {
  ModelParams p;
  p.extractor.push_back(DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2)});
  p.classifier = DenseLayer{Matrix::Zero(3, 2), vec({1, 2, 3})};
  CHECK(forward_logits(p, vec({5, 6})) == vec({1, 2, 3}));
  CHECK(forward_logits(p, vec({0, 0})) == vec({1, 2, 3}));
  p.classifier = DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2)};
  CHECK(forward_logits(p, vec({0.5, 2})) == vec({0.5, 2}));
  CHECK_THROWS_AS(forward_logits(p, vec({1})), std::invalid_argument);
}

TEST_CASE("predict breaks ties toward the lowest class") {
  ModelParams p;
  p.extractor.push_back(DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2)});
  p.classifier = DenseLayer{Matrix::Zero(3, 2), vec({1, 3, 3})};
  CHECK(predict(p, vec({1, 1})) == 1);
}

TEST_CASE("local_loss reductions") {
  const auto inst = testing::random_gradient_instance(5, 2);
  LossHyper h;
  const PrototypeTable table(inst.protos);
  auto per_sample = [&](const Sample& s, double lambda) {
    const Vector z = forward_features(inst.params, s.x);
    return lambda * alpha_sparsity_loss(z, s.y, table, h) + cross_entropy(forward_logits(inst.params, z), s.y);
  };
  const double a = per_sample(inst.batch[0], h.lambda);
  const double b = per_sample(inst.batch[1], h.lambda);
  CHECK(local_loss(inst.batch, inst.params, inst.protos, h) == doctest::Approx((a + b) / 2).epsilon(1e-13));
  CHECK(local_loss(std::span(inst.batch).first(1), inst.params, inst.protos, h) == doctest::Approx(a).epsilon(1e-13));
  LossHyper no_proto = h;
  no_proto.lambda = 0.0;
  CHECK(local_loss(inst.batch, inst.params, inst.protos, no_proto) ==
        doctest::Approx((per_sample(inst.batch[0], 0) + per_sample(inst.batch[1], 0)) / 2).epsilon(1e-13));
  CHECK_THROWS_AS(local_loss(Batch{}, inst.params, inst.protos, h), std::invalid_argument);
}

TEST_CASE("backward with lambda = 0 or no prototypes is plain cross-entropy backprop") {
  const auto inst = testing::random_gradient_instance(6);
  LossHyper h;
  h.lambda = 0.0;
  const LossAndGrad with_protos = backward(inst.params, inst.batch, inst.protos, h);
  const LossAndGrad without = backward(inst.params, inst.batch, GlobalPrototypeSet{}, LossHyper{});
  CHECK(with_protos.grads == without.grads);
  CHECK(with_protos.loss == doctest::Approx(without.loss).epsilon(1e-15));
  CHECK(testing::max_gradient_error(inst, h) < 1e-4);
  CHECK_THROWS_AS(backward(inst.params, Batch{}, inst.protos, h), std::invalid_argument);
}

TEST_CASE("backward matches central differences") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto inst = testing::random_gradient_instance(seed);
    for (double lambda : {1.0, 100.0}) {
      LossHyper h;
      h.lambda = lambda;
      const double err = testing::max_gradient_error(inst, h);
      CHECK_MESSAGE(err < 1e-4, "seed " << seed << " lambda " << lambda << " err " << err);
    }
  }
}

TEST_CASE("flatten and assign_flat round-trip") {
  Rng rng(7);
  const ModelParams p = init_params(small_shape(), rng);
  const Vector flat = p.flatten();
  CHECK(static_cast<std::size_t>(flat.size()) == p.parameter_count());
  ModelParams q = p.zeros_like();
  q.assign_flat(flat);
  CHECK(q == p);
  CHECK_THROWS_AS(q.assign_flat(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("sgd_step examples") {
  ModelParams p = scalar_params(1.0);
  auto opt = OptimizerState::for_params(p, 0.1, 0.0, 0.0);
  sgd_step(p, opt, scalar_params(0.0));
  CHECK(p == scalar_params(1.0));
  sgd_step(p, opt, scalar_params(1.0));
  CHECK(p.extractor[0].weights(0, 0) == doctest::Approx(0.9));

  ModelParams m = scalar_params(0.0);
  auto mom = OptimizerState::for_params(m, 0.1, 0.5, 0.0);
  sgd_step(m, mom, scalar_params(1.0));
  CHECK(m.extractor[0].weights(0, 0) == doctest::Approx(-0.1));
  sgd_step(m, mom, scalar_params(1.0));
  CHECK(m.extractor[0].weights(0, 0) == doctest::Approx(-0.25));

  ModelParams d = scalar_params(2.0);
  auto decay = OptimizerState::for_params(d, 0.1, 0.0, 0.5);
  sgd_step(d, decay, scalar_params(0.0));
  CHECK(d.extractor[0].weights(0, 0) == doctest::Approx(2.0 - 0.1 * 1.0));

  Rng rng(8);
  ModelParams other = init_params(small_shape(), rng);
  CHECK_THROWS_AS(sgd_step(d, decay, other), std::invalid_argument);
}

TEST_CASE("aggregate_params examples") {
  const ModelParams a = scalar_params(0.0);
  const ModelParams b = scalar_params(4.0);
  std::vector<WeightedParams> ups = {{&a, 1}, {&b, 3}};
  CHECK(aggregate_params(ups).extractor[0].weights(0, 0) == doctest::Approx(3.0));
  std::vector<WeightedParams> swapped = {{&b, 3}, {&a, 1}};
  CHECK(aggregate_params(swapped) == aggregate_params(ups));

  Rng rng(9);
  const ModelParams p = init_params(small_shape(), rng);
  std::vector<WeightedParams> same = {{&p, 2}, {&p, 5}, {&p, 1}};
  CHECK(aggregate_params(same).flatten().isApprox(p.flatten(), 1e-15));

  CHECK_THROWS_AS(aggregate_params(std::vector<WeightedParams>{}), std::invalid_argument);
  std::vector<WeightedParams> mismatched = {{&a, 1}, {&p, 1}};
  CHECK_THROWS_AS(aggregate_params(mismatched), std::invalid_argument);
  std::vector<WeightedParams> zero_weight = {{&a, 0}};
  CHECK_THROWS_AS(aggregate_params(zero_weight), std::invalid_argument);
}

TEST_CASE("aggregate_params is linear in each upload") {
  Rng rng(10);
  const ModelParams a = init_params(small_shape(), rng);
  const ModelParams b = init_params(small_shape(), rng);
  std::vector<WeightedParams> ups = {{&a, 2}, {&b, 6}};
  const Vector expected = 0.25 * a.flatten() + 0.75 * b.flatten();
  CHECK(aggregate_params(ups).flatten().isApprox(expected, 1e-14));
}
