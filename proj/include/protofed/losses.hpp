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

#include <vector>

#include "protofed/numerics.hpp"
#include "protofed/prototype_set.hpp"

namespace protofed {

struct LossHyper {
  double tau = 0.07;
  double alpha = 0.25;
  double lambda = 100.0;
  bool contrast_enabled = true;
  bool correction_enabled = true;

  /// Throws std::invalid_argument when tau <= 0, alpha outside (0, 1] or lambda < 0.
  void validate() const;
};

/// Prototypes of a GlobalPrototypeSet flattened into unit-norm rows with their
/// class ids. Built once per set and reused across every sample in a batch.
class PrototypeTable {
 public:
  PrototypeTable() = default;
  explicit PrototypeTable(const GlobalPrototypeSet& set);

  bool empty() const { return class_ids_.empty(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(class_ids_.size()); }
  Eigen::Index dim() const { return unit_.cols(); }
  const Matrix& unit_rows() const { return unit_; }
  const std::vector<int>& class_ids() const { return class_ids_; }
  /// Number of prototypes of `class_id` (C_y).
  int count(int class_id) const;

 private:
  Matrix unit_;
  std::vector<int> class_ids_;
};

/// cos(z, g)^alpha with cos clamped to [0, 1].
double s_alpha(const Vector& z, const Vector& g, double alpha);

double contrastive_loss(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper);
double correction_loss(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper);
/// Sum of the enabled contrastive and correction terms (unweighted by lambda).
double alpha_sparsity_loss(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper);

double contrastive_loss(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper);
double correction_loss(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper);
double alpha_sparsity_loss(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper);

/// -log softmax(logits)[y].
double cross_entropy(const Vector& logits, int y);

/// Gradient of lambda * alpha_sparsity_loss with respect to z, prototypes held fixed.
/// An empty table yields the zero vector. The |.| kink of the correction term
/// takes subgradient 0.
Vector loss_grad_z(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper);
Vector loss_grad_z(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper);

}  // namespace protofed
