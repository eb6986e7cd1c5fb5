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

#include "protofed/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace protofed {
namespace {

// Per-prototype similarity terms for a single feature vector.
struct Similarities {
  Vector unit_z;  // z / |z| (zero when |z| < kZeroNorm)
  double norm_z = 0;
  Vector cos;  // clamped to [0, 1]
  Vector s;    // cos^alpha
};

Similarities similarities(const Vector& z, const PrototypeTable& protos, double alpha) {
  if (z.size() != protos.dim()) {
    throw std::invalid_argument("prototype loss: feature dim " + std::to_string(z.size()) +
                                " does not match prototype dim " + std::to_string(protos.dim()));
  }
  Similarities out;
  out.norm_z = z.norm();
  out.unit_z = normalize(z);
  out.cos = (protos.unit_rows() * out.unit_z).cwiseMax(0.0).cwiseMin(1.0);
  out.s = out.cos.unaryExpr([alpha](double c) { return c > 0.0 ? std::pow(c, alpha) : 0.0; });
  return out;
}

void require_class(const PrototypeTable& protos, int y) {
  if (protos.empty()) throw std::invalid_argument("prototype loss: empty prototype set");
  if (protos.count(y) == 0) {
    throw std::invalid_argument("prototype loss: no prototype for class " + std::to_string(y));
  }
}

double contrastive_from(const Vector& s, int y, const PrototypeTable& protos, double tau) {
  const auto& ids = protos.class_ids();
  Vector pos(protos.count(y));
  Eigen::Index p = 0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (ids[static_cast<std::size_t>(j)] == y) pos[p++] = s[j] / tau;
  }
  const double value = log_sum_exp(Vector(s / tau)) - log_sum_exp(pos);
  return std::max(value, 0.0);
}

double correction_from(const Vector& s, int y, const PrototypeTable& protos) {
  const auto& ids = protos.class_ids();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (ids[static_cast<std::size_t>(j)] == y) sum += s[j];
  }
  return std::abs(sum - protos.count(y));
}

}  // namespace

void LossHyper::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0, got " + std::to_string(tau));
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0, got " + std::to_string(lambda));
}

PrototypeTable::PrototypeTable(const GlobalPrototypeSet& set) {
  const std::size_t n = set.total();
  if (n == 0) return;
  const Eigen::Index dim = set.by_class.begin()->second.front().vector.size();
  unit_.resize(static_cast<Eigen::Index>(n), dim);
  class_ids_.reserve(n);
  Eigen::Index row = 0;
  for (const auto& [cls, list] : set.by_class) {
    for (const auto& proto : list) {
      if (proto.vector.size() != dim) throw std::invalid_argument("PrototypeTable: ragged prototype dims");
      unit_.row(row++) = normalize(proto.vector).transpose();
      class_ids_.push_back(cls);
    }
  }
}

int PrototypeTable::count(int class_id) const {
  return static_cast<int>(std::count(class_ids_.begin(), class_ids_.end(), class_id));
}

double s_alpha(const Vector& z, const Vector& g, double alpha) {
  const double c = std::clamp(cosine_similarity(z, g), 0.0, 1.0);
  return c > 0.0 ? std::pow(c, alpha) : 0.0;
}

double contrastive_loss(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper) {
  require_class(protos, y);
  return contrastive_from(similarities(z, protos, hyper.alpha).s, y, protos, hyper.tau);
}

double correction_loss(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper) {
  require_class(protos, y);
  return correction_from(similarities(z, protos, hyper.alpha).s, y, protos);
}

double alpha_sparsity_loss(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper) {
  if (!hyper.contrast_enabled && !hyper.correction_enabled) return 0.0;
  require_class(protos, y);
  const Vector s = similarities(z, protos, hyper.alpha).s;
  double total = 0.0;
  if (hyper.contrast_enabled) total += contrastive_from(s, y, protos, hyper.tau);
  if (hyper.correction_enabled) total += correction_from(s, y, protos);
  return total;
}

double contrastive_loss(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper) {
  return contrastive_loss(z, y, PrototypeTable(protos), hyper);
}
double correction_loss(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper) {
  return correction_loss(z, y, PrototypeTable(protos), hyper);
}
double alpha_sparsity_loss(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper) {
  return alpha_sparsity_loss(z, y, PrototypeTable(protos), hyper);
}

double cross_entropy(const Vector& logits, int y) {
  if (y < 0 || y >= logits.size()) {
    throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                                std::to_string(logits.size()) + ")");
  }
  return log_sum_exp(logits) - logits[y];
}

Vector loss_grad_z(const Vector& z, int y, const PrototypeTable& protos, const LossHyper& hyper) {
  Vector grad = Vector::Zero(z.size());
  if (protos.empty() || hyper.lambda == 0.0) return grad;
  if (!hyper.contrast_enabled && !hyper.correction_enabled) return grad;
  require_class(protos, y);

  const Similarities sim = similarities(z, protos, hyper.alpha);
  if (sim.norm_z < kZeroNorm) return grad;
  const auto& ids = protos.class_ids();
  const Eigen::Index n = protos.size();

  // dL/ds_j for every prototype.
  Vector dl_ds = Vector::Zero(n);
  if (hyper.contrast_enabled) {
    const Vector logits = sim.s / hyper.tau;
    const double lse_all = log_sum_exp(logits);
    double pos_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ids[static_cast<std::size_t>(j)] == y) pos_max = std::max(pos_max, logits[j]);
    }
    double pos_sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ids[static_cast<std::size_t>(j)] == y) pos_sum += std::exp(logits[j] - pos_max);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      double d = std::exp(logits[j] - lse_all);
      if (ids[static_cast<std::size_t>(j)] == y) d -= std::exp(logits[j] - pos_max) / pos_sum;
      dl_ds[j] += d / hyper.tau;
    }
  }
  if (hyper.correction_enabled) {
    double residual = -static_cast<double>(protos.count(y));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ids[static_cast<std::size_t>(j)] == y) residual += sim.s[j];
    }
    const double sign = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ids[static_cast<std::size_t>(j)] == y) dl_ds[j] += sign;
    }
  }

  // ds_j/dz = alpha c^(alpha-1) (g_hat - c z_hat) / |z| for c > 0; zero where clamped.
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = sim.cos[j];
    if (c <= 0.0 || dl_ds[j] == 0.0) continue;
    const double ds_dc = hyper.alpha * std::pow(c, hyper.alpha - 1.0);
    grad += (dl_ds[j] * ds_dc / sim.norm_z) * (protos.unit_rows().row(j).transpose() - c * sim.unit_z);
  }
  return hyper.lambda * grad;
}

Vector loss_grad_z(const Vector& z, int y, const GlobalPrototypeSet& protos, const LossHyper& hyper) {
  return loss_grad_z(z, y, PrototypeTable(protos), hyper);
}

}  // namespace protofed
