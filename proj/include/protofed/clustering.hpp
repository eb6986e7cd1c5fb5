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

#include "protofed/numerics.hpp"
#include "protofed/rng.hpp"

namespace protofed {

/// A flat clustering: assignments[i] is the cluster of point i, ids are dense in [0, num_clusters).
struct Partition {
  std::vector<int> assignments;
  int num_clusters = 0;

  /// Throws std::logic_error unless ids are dense and every cluster is non-empty.
  void validate() const;
  std::vector<std::vector<int>> members() const;
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// FINCH levels from finest (level 0, on the input points) to coarsest.
/// Every level's assignments are expressed over the original points.
struct FinchHierarchy {
  std::vector<Partition> levels;
};

/// Undirected adjacency lists of the first-neighbour graph (sorted, no self loops).
using Adjacency = std::vector<std::vector<int>>;

/// Index of each point's most cosine-similar other point; ties go to the lowest
/// index. A single point has no neighbour (-1).
std::vector<int> first_neighbors(std::span<const Vector> points);

/// Edge (i, j) iff nn(i) = j, nn(j) = i, or nn(i) = nn(j).
Adjacency first_neighbor_graph(std::span<const Vector> points);

/// Connected components labelled in order of their lowest member index.
Partition connected_components(const Adjacency& graph);

FinchHierarchy finch(std::span<const Vector> points);

/// The level with the fewest clusters that is still greater than one, or the
/// single-cluster level when no level has more than one cluster.
const Partition& select_partition(const FinchHierarchy& hierarchy);

/// Lloyd's algorithm on unit-normalised points with cosine distance and
/// k-means++ seeding. Stops when assignments are stable or after max_iterations.
struct KMeansResult {
  Partition partition;
  /// Within-cluster cosine-distance objective after seeding and after every iteration.
  std::vector<double> objective_trace;
};
KMeansResult kmeans_detailed(std::span<const Vector> points, int k, Rng& rng, int max_iterations = 100);
Partition kmeans(std::span<const Vector> points, int k, Rng& rng);

/// Arithmetic mean of each cluster's members.
std::vector<Vector> cluster_centers(const Partition& partition, std::span<const Vector> points);

}  // namespace protofed
