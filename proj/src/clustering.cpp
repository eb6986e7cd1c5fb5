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

#include "protofed/clustering.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace protofed {
namespace {

void require_points(std::span<const Vector> points, const char* what) {
  if (points.empty()) throw std::invalid_argument(std::string(what) + ": no points");
  for (const auto& p : points) require_same_dim(points.front(), p, what);
}

// Cosine similarity matrix of unit-normalised points.
Matrix cosine_matrix(std::span<const Vector> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix unit(n, points.front().size());
  for (Eigen::Index i = 0; i < n; ++i) unit.row(i) = normalize(points[static_cast<std::size_t>(i)]).transpose();
  return unit * unit.transpose();
}

// Relabel cluster ids in order of first appearance so equal partitions compare equal.
Partition canonical(const std::vector<int>& raw) {
  Partition p;
  p.assignments.resize(raw.size());
  std::vector<int> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int id = raw[i];
    if (id >= static_cast<int>(remap.size())) remap.resize(static_cast<std::size_t>(id) + 1, -1);
    if (remap[static_cast<std::size_t>(id)] < 0) remap[static_cast<std::size_t>(id)] = p.num_clusters++;
    p.assignments[i] = remap[static_cast<std::size_t>(id)];
  }
  return p;
}

}  // namespace

void Partition::validate() const {
  if (num_clusters < 0) throw std::logic_error("Partition: negative cluster count");
  std::vector<int> sizes(static_cast<std::size_t>(num_clusters), 0);
  for (int a : assignments) {
    if (a < 0 || a >= num_clusters) throw std::logic_error("Partition: cluster id out of range");
    ++sizes[static_cast<std::size_t>(a)];
  }
  for (int s : sizes) {
    if (s == 0) throw std::logic_error("Partition: empty cluster");
  }
}

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_clusters));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    out[static_cast<std::size_t>(assignments[i])].push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> first_neighbors(std::span<const Vector> points) {
  require_points(points, "first_neighbors");
  const std::size_t n = points.size();
  std::vector<int> nn(n, -1);
  if (n == 1) return nn;
  const Matrix sim = cosine_matrix(points);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double s = sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (s > best) {
        best = s;
        nn[i] = static_cast<int>(j);
      }
    }
  }
  return nn;
}

Adjacency first_neighbor_graph(std::span<const Vector> points) {
  const std::vector<int> nn = first_neighbors(points);
  const std::size_t n = points.size();
  Adjacency adj(n);
  if (n == 1) return adj;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool linked = nn[i] == static_cast<int>(j) || nn[j] == static_cast<int>(i) || nn[i] == nn[j];
      if (linked) {
        adj[i].push_back(static_cast<int>(j));
        adj[j].push_back(static_cast<int>(i));
      }
    }
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

Partition connected_components(const Adjacency& graph) {
  const std::size_t n = graph.size();
  std::vector<int> label(n, -1);
  int next = 0;
  std::vector<int> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    label[start] = next;
    stack.push_back(static_cast<int>(start));
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : graph[static_cast<std::size_t>(v)]) {
        if (label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return Partition{std::move(label), next};
}

FinchHierarchy finch(std::span<const Vector> points) {
  require_points(points, "finch");
  FinchHierarchy h;
  h.levels.push_back(connected_components(first_neighbor_graph(points)));
  while (h.levels.back().num_clusters > 1) {
    const Partition& prev = h.levels.back();
    const std::vector<Vector> means = cluster_centers(prev, points);
    const Partition merged = connected_components(first_neighbor_graph(means));
    if (merged.num_clusters >= prev.num_clusters) break;
    std::vector<int> composed(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      composed[i] = merged.assignments[static_cast<std::size_t>(prev.assignments[i])];
    }
    h.levels.push_back(Partition{std::move(composed), merged.num_clusters});
  }
  return h;
}

const Partition& select_partition(const FinchHierarchy& hierarchy) {
  if (hierarchy.levels.empty()) throw std::invalid_argument("select_partition: empty hierarchy");
  const Partition* best = nullptr;
  for (const auto& level : hierarchy.levels) {
    if (level.num_clusters > 1 && (best == nullptr || level.num_clusters < best->num_clusters)) best = &level;
  }
  if (best != nullptr) return *best;
  return *std::min_element(hierarchy.levels.begin(), hierarchy.levels.end(),
                           [](const Partition& a, const Partition& b) { return a.num_clusters < b.num_clusters; });
}

KMeansResult kmeans_detailed(std::span<const Vector> points, int k, Rng& rng, int max_iterations) {
  require_points(points, "kmeans");
  const std::size_t n = points.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  const auto kk = static_cast<std::size_t>(k);
  std::vector<Vector> unit;
  unit.reserve(n);
  for (const auto& p : points) unit.push_back(normalize(p));
  auto distance = [](const Vector& a, const Vector& b) { return 1.0 - cosine_similarity(a, b); };

  // k-means++ seeding on cosine distance.
  std::vector<Vector> centers;
  centers.reserve(kk);
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
  centers.push_back(unit[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  while (centers.size() < kk) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, distance(unit[i], c));
      d2[i] = chosen[i] ? 0.0 : std::max(best, 0.0);
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        r -= d2[i];
        if (r < 0.0) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    centers.push_back(unit[pick]);
  }

  KMeansResult result;
  std::vector<int> assign(n, -1);
  auto assign_all = [&]() {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < kk; ++c) {
        const double d = distance(unit[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
      objective += best_d;
    }
    return std::pair{changed, objective};
  };
  auto objective_of = [&]() {
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += distance(unit[i], centers[static_cast<std::size_t>(assign[i])]);
    return obj;
  };
  // Refill empty clusters with the point farthest from its centre in the largest cluster.
  auto repair_empty = [&]() {
    for (std::size_t c = 0; c < kk; ++c) {
      std::vector<int> sizes(kk, 0);
      for (int a : assign) ++sizes[static_cast<std::size_t>(a)];
      if (sizes[c] > 0) continue;
      const auto largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != largest) continue;
        const double d = distance(unit[i], centers[static_cast<std::size_t>(largest)]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      assign[far] = static_cast<int>(c);
      centers[c] = unit[far];
    }
  };
  auto update_centers = [&]() {
    std::vector<Vector> sums(kk, Vector::Zero(unit.front().size()));
    for (std::size_t i = 0; i < n; ++i) sums[static_cast<std::size_t>(assign[i])] += unit[i];
    for (std::size_t c = 0; c < kk; ++c) centers[c] = sums[c];
  };

  assign_all();
  repair_empty();
  result.objective_trace.push_back(objective_of());
  for (int it = 0; it < max_iterations; ++it) {
    update_centers();
    const auto [changed, obj] = assign_all();
    repair_empty();
    result.objective_trace.push_back(objective_of());
    if (!changed) break;
  }
  result.partition = canonical(assign);
  return result;
}

Partition kmeans(std::span<const Vector> points, int k, Rng& rng) { return kmeans_detailed(points, k, rng).partition; }

std::vector<Vector> cluster_centers(const Partition& partition, std::span<const Vector> points) {
  if (partition.assignments.size() != points.size()) {
    throw std::invalid_argument("cluster_centers: partition does not cover the points");
  }
  if (points.empty()) return {};
  std::vector<Vector> sums(static_cast<std::size_t>(partition.num_clusters), Vector::Zero(points.front().size()));
  std::vector<int> counts(static_cast<std::size_t>(partition.num_clusters), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(partition.assignments[i]);
    sums[c] += points[i];
    ++counts[c];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] > 0) sums[c] /= static_cast<double>(counts[c]);
  }
  return sums;
}

}  // namespace protofed
