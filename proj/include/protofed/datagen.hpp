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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "protofed/model.hpp"
#include "protofed/rng.hpp"

namespace protofed {

/// One synthetic data domain. Samples are a domain-rotated class anchor plus
/// isotropic Gaussian noise with standard deviation `spread`; a larger spread
/// makes a harder domain.
struct DomainSpec {
  int domain_id = 0;
  std::string name;
  double spread = 0.1;
  std::uint64_t transform_seed = 0;
  int n_train = 100;
  int n_test = 500;

  void validate() const;
  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

enum class PartitionKind { kIid, kDirichlet };

struct PartitionSpec {
  PartitionKind kind = PartitionKind::kIid;
  double dirichlet_alpha = 0.5;
};

struct ClientData {
  int client_id = 0;
  int domain_id = 0;
  std::vector<Sample> train;
};

struct FederatedDataset {
  int num_classes = 0;
  int input_dim = 0;
  std::vector<ClientData> clients;
  /// Indexed like `domains`.
  std::vector<std::vector<Sample>> domain_tests;
  std::vector<DomainSpec> domains;
};

/// Class anchors on the unit sphere in R^V shared by every domain.
std::vector<Vector> draw_class_anchors(int num_classes, int input_dim, Rng& rng);

/// Haar-random orthogonal V x V matrix (QR of a Gaussian matrix with sign fix).
Matrix random_orthogonal(int dim, Rng& rng);

/// Samples `labels.size()` points of the given domain, one per label.
std::vector<Sample> sample_domain(const std::vector<Vector>& anchors, const DomainSpec& domain,
                                  std::span<const int> labels, Rng& rng);

/// Splits each class's indices across K clients with Dirichlet(alpha) proportions
/// and largest-remainder rounding (remainder ties go to the lower client index).
std::vector<std::vector<int>> dirichlet_partition(std::span<const int> labels, int num_classes, double alpha,
                                                  int num_clients, Rng& rng);

/// Builds the federated dataset: `clients_per_domain[d]` clients hold data of
/// domain d, each with `n_train` training samples under an IID label split, or
/// a Dirichlet label split of the same total across all clients.
FederatedDataset generate_domains(int num_classes, int input_dim, std::span<const DomainSpec> domains,
                                  std::span<const int> clients_per_domain, const PartitionSpec& partition, Rng& rng);

/// Mean pairwise Euclidean distance between same-class samples.
double mean_within_class_distance(std::span<const Sample> samples, int num_classes);

}  // namespace protofed
