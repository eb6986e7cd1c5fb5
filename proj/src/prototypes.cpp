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

#include "protofed/prototypes.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "protofed/clustering.hpp"

namespace protofed {

std::string_view to_string(PrototypeMode mode) {
  switch (mode) {
    case PrototypeMode::kAverage:
      return "average";
    case PrototypeMode::kCluster:
      return "cluster";
  }
  return "?";
}

std::string_view to_string(ClusterBackend backend) {
  switch (backend) {
    case ClusterBackend::kFinch:
      return "finch";
    case ClusterBackend::kKMeans:
      return "kmeans";
    case ClusterBackend::kKMeansAdaptive:
      return "kmeans_adaptive";
  }
  return "?";
}

void PrivacyConfig::validate() const {
  if (!(scale >= 0.0)) throw std::invalid_argument("privacy.scale must be >= 0");
  if (!(perturbation_coefficient >= 0.0 && perturbation_coefficient <= 1.0)) {
    throw std::invalid_argument("privacy.coefficient must lie in [0, 1]");
  }
}

std::vector<Prototype> cluster_prototypes(int class_id, std::span<const Vector> points,
                                          std::span<const int> member_counts, const ClusterOptions& options, Rng& rng) {
  if (points.empty()) return {};
  if (member_counts.size() != points.size()) {
    throw std::invalid_argument("cluster_prototypes: member_counts size mismatch");
  }
  Partition partition;
  switch (options.backend) {
    case ClusterBackend::kFinch:
      partition = select_partition(finch(points));
      break;
    case ClusterBackend::kKMeans: {
      const int k = std::clamp(options.kmeans_k, 1, static_cast<int>(points.size()));
      partition = kmeans(points, k, rng);
      break;
    }
    case ClusterBackend::kKMeansAdaptive:
      partition = kmeans(points, select_partition(finch(points)).num_clusters, rng);
      break;
  }
  const std::vector<Vector> centers = cluster_centers(partition, points);
  std::vector<Prototype> out;
  out.reserve(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) out.push_back(Prototype{class_id, centers[c], 0});
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[static_cast<std::size_t>(partition.assignments[i])].member_count += member_counts[i];
  }
  return out;
}

LocalPrototypeSet compute_local_prototypes(int client_id, const FeaturesByClass& features, PrototypeMode mode,
                                           const ClusterOptions& options, Rng& rng) {
  LocalPrototypeSet set;
  set.client_id = client_id;
  for (const auto& [cls, vecs] : features) {
    if (vecs.empty()) continue;
    if (mode == PrototypeMode::kAverage) {
      set.by_class[cls].push_back(Prototype{cls, mean_of(vecs), static_cast<int>(vecs.size())});
    } else {
      const std::vector<int> ones(vecs.size(), 1);
      set.by_class[cls] = cluster_prototypes(cls, vecs, ones, options, rng);
    }
  }
  return set;
}

GlobalPrototypeSet pool_local_prototypes(std::span<const LocalPrototypeSet> locals, int round_index) {
  GlobalPrototypeSet out;
  out.round_index = round_index;
  for (const auto& local : locals) {
    for (const auto& [cls, protos] : local.by_class) {
      auto& pooled = out.by_class[cls];
      pooled.insert(pooled.end(), protos.begin(), protos.end());
    }
  }
  return out;
}

GlobalPrototypeSet compute_global_prototypes(std::span<const LocalPrototypeSet> locals, const GlobalOptions& options,
                                             Rng& rng, int round_index) {
  const GlobalPrototypeSet pooled = pool_local_prototypes(locals, round_index);
  GlobalPrototypeSet out;
  out.round_index = round_index;
  for (const auto& [cls, protos] : pooled.by_class) {
    if (protos.empty()) continue;
    std::vector<Vector> vecs;
    std::vector<int> counts;
    vecs.reserve(protos.size());
    counts.reserve(protos.size());
    for (const auto& p : protos) {
      vecs.push_back(p.vector);
      counts.push_back(p.member_count);
    }
    if (options.mode == PrototypeMode::kAverage) {
      Vector mean = Vector::Zero(vecs.front().size());
      double weight_total = 0.0;
      int members = 0;
      for (std::size_t i = 0; i < vecs.size(); ++i) {
        const double w = options.member_weighted_average ? static_cast<double>(counts[i]) : 1.0;
        mean += w * vecs[i];
        weight_total += w;
        members += counts[i];
      }
      out.by_class[cls].push_back(Prototype{cls, mean / weight_total, members});
    } else {
      out.by_class[cls] = cluster_prototypes(cls, vecs, counts, options.cluster, rng);
    }
  }
  return out;
}

LocalPrototypeSet perturb_prototypes(const LocalPrototypeSet& set, const PrivacyConfig& config, Rng& rng) {
  config.validate();
  if (!config.enabled) return set;
  LocalPrototypeSet out = set;
  for (auto& [cls, protos] : out.by_class) {
    for (auto& proto : protos) {
      for (Eigen::Index d = 0; d < proto.vector.size(); ++d) {
        if (rng.bernoulli(config.perturbation_coefficient)) proto.vector[d] += rng.normal(0.0, config.scale);
      }
    }
  }
  return out;
}

}  // namespace protofed
