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

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "protofed/numerics.hpp"
#include "protofed/prototype_set.hpp"
#include "protofed/rng.hpp"

namespace protofed {

enum class PrototypeMode { kAverage, kCluster };

enum class ClusterBackend {
  kFinch,
  /// K-means with a fixed k, clamped to the number of points.
  kKMeans,
  /// K-means with k equal to the cluster count FINCH would have selected.
  kKMeansAdaptive,
};

std::string_view to_string(PrototypeMode mode);
std::string_view to_string(ClusterBackend backend);

struct ClusterOptions {
  ClusterBackend backend = ClusterBackend::kFinch;
  int kmeans_k = 2;
};

struct PrivacyConfig {
  bool enabled = false;
  double scale = 0.05;
  double perturbation_coefficient = 0.1;

  void validate() const;
};

/// Class id -> feature vectors of that class.
using FeaturesByClass = std::map<int, std::vector<Vector>>;

/// Groups `points` into prototypes with the configured backend. `rng` is only
/// drawn from by the k-means backends.
std::vector<Prototype> cluster_prototypes(int class_id, std::span<const Vector> points,
                                          std::span<const int> member_counts, const ClusterOptions& options, Rng& rng);

/// One mean prototype per class (average) or one per selected cluster (cluster).
/// Classes with no features are omitted.
LocalPrototypeSet compute_local_prototypes(int client_id, const FeaturesByClass& features, PrototypeMode mode,
                                           const ClusterOptions& options, Rng& rng);

struct GlobalOptions {
  PrototypeMode mode = PrototypeMode::kCluster;
  ClusterOptions cluster;
  /// Average mode only: weight prototypes by member_count instead of equally.
  bool member_weighted_average = false;
};

/// Pools every client's prototypes per class, then averages or clusters them.
GlobalPrototypeSet compute_global_prototypes(std::span<const LocalPrototypeSet> locals, const GlobalOptions& options,
                                             Rng& rng, int round_index = 0);

/// Every local prototype forwarded unchanged (no server-side aggregation).
GlobalPrototypeSet pool_local_prototypes(std::span<const LocalPrototypeSet> locals, int round_index = 0);

/// Adds N(0, scale^2) noise to each coordinate independently with probability
/// perturbation_coefficient. A disabled config returns the set unchanged.
LocalPrototypeSet perturb_prototypes(const LocalPrototypeSet& set, const PrivacyConfig& config, Rng& rng);

}  // namespace protofed
