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

#include "protofed/numerics.hpp"

namespace protofed {

Vector mean_of(std::span<const Vector> vs) {
  if (vs.empty()) throw std::invalid_argument("mean_of: empty input");
  Vector acc = Vector::Zero(vs.front().size());
  for (const auto& v : vs) {
    require_same_dim(acc, v, "mean_of");
    acc += v;
  }
  return acc / static_cast<double>(vs.size());
}

}  // namespace protofed
