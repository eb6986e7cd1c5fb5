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
#include <map>
#include <vector>

#include "protofed/numerics.hpp"

namespace protofed {

struct Prototype {
  int class_id = 0;
  Vector vector;
  int member_count = 1;

  friend bool operator==(const Prototype& a, const Prototype& b) {
    return a.class_id == b.class_id && a.member_count == b.member_count && a.vector.size() == b.vector.size() &&
           a.vector == b.vector;
  }
};

/// Class id -> prototypes of that class. Classes without prototypes are absent.
using PrototypesByClass = std::map<int, std::vector<Prototype>>;

inline std::size_t total_prototypes(const PrototypesByClass& by_class) {
  std::size_t n = 0;
  for (const auto& [cls, protos] : by_class) n += protos.size();
  return n;
}

/// Prototypes produced by one client (P_k^m for every class m the client holds).
struct LocalPrototypeSet {
  int client_id = 0;
  PrototypesByClass by_class;

  std::size_t count(int class_id) const {
    auto it = by_class.find(class_id);
    return it == by_class.end() ? 0 : it->second.size();
  }
  std::size_t total() const { return total_prototypes(by_class); }
  bool empty() const { return by_class.empty(); }

  friend bool operator==(const LocalPrototypeSet&, const LocalPrototypeSet&) = default;
};

/// Server-side prototypes (G^m per class) broadcast to every client.
struct GlobalPrototypeSet {
  int round_index = 0;
  PrototypesByClass by_class;

  std::size_t count(int class_id) const {
    auto it = by_class.find(class_id);
    return it == by_class.end() ? 0 : it->second.size();
  }
  std::size_t total() const { return total_prototypes(by_class); }
  bool empty() const { return by_class.empty(); }

  friend bool operator==(const GlobalPrototypeSet&, const GlobalPrototypeSet&) = default;
};

}  // namespace protofed
