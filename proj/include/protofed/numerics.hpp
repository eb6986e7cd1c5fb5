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

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace protofed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Norms below this are treated as zero by every similarity routine.
inline constexpr double kZeroNorm = 1e-12;

template <typename DerivedA, typename DerivedB>
void require_same_dim(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b, const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

/// Cosine of the angle between u and v; 0 when either norm is below kZeroNorm.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  require_same_dim(u, v, "cosine_similarity");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu < kZeroNorm || nv < kZeroNorm) return Scalar(0);
  return u.dot(v) / (nu * nv);
}

/// u / |u|, or the zero vector when |u| < kZeroNorm.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalize(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = u.norm();
  if (n < kZeroNorm) {
    return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(u.size());
  }
  return u / n;
}

/// log(sum(exp(xs))) with max-shift.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& xs) {
  using Scalar = typename Derived::Scalar;
  if (xs.size() == 0) throw std::invalid_argument("log_sum_exp: empty input");
  const Scalar m = xs.maxCoeff();
  return m + std::log((xs.array() - m).exp().sum());
}

inline double log_sum_exp(std::span<const double> xs) {
  return log_sum_exp(Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Element-wise mean of equally-sized vectors.
Vector mean_of(std::span<const Vector> vs);

}  // namespace protofed
