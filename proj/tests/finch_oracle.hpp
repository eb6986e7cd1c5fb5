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

#include <cmath>
#include <numeric>
#include <vector>

#include "protofed/numerics.hpp"

namespace protofed::testing {

/// Brute-force level-0 FINCH labels: full cosine matrix, first neighbours with
/// lowest-index ties, then union-find over the three edge rules. Labels are
/// renumbered by first appearance.
inline std::vector<int> brute_force_components(const std::vector<Vector>& pts) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> nn(n, -1);
  for (int i = 0; i < n; ++i) {
    double best = -2.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double c = pts[i].dot(pts[j]) / (pts[i].norm() * pts[j].norm());
      if (c > best) {
        best = c;
        nn[i] = j;
      }
    }
  }
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (nn[i] == j || nn[j] == i || (nn[i] >= 0 && nn[i] == nn[j])) parent[find(i)] = find(j);
    }
  }
  std::vector<int> label(n, -1), root_label(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

}  // namespace protofed::testing
