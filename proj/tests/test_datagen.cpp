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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "protofed/datagen.hpp"

using namespace protofed;

namespace {

std::vector<int> balanced_labels(int n, int classes) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % classes;
  return labels;
}

void check_exact_partition(const std::vector<std::vector<int>>& parts, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& p : parts) {
    for (int i : p) {
      REQUIRE(i >= 0);
      REQUIRE(static_cast<std::size_t>(i) < n);
      ++seen[static_cast<std::size_t>(i)];
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

// Largest per-client share of any class, averaged over classes.
double class_share_dispersion(const std::vector<std::vector<int>>& parts, const std::vector<int>& labels, int classes) {
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    const double n_c = static_cast<double>(std::count(labels.begin(), labels.end(), c));
    double mx = 0.0;
    for (const auto& p : parts) {
      double k = 0;
      for (int i : p) k += labels[static_cast<std::size_t>(i)] == c;
      mx = std::max(mx, k / n_c);
    }
    total += mx;
  }
  return total / classes;
}

DomainSpec domain(int id, double spread, std::uint64_t transform) {
  DomainSpec d;
  d.domain_id = id;
  d.name = "d" + std::to_string(id);
  d.spread = spread;
  d.transform_seed = transform;
  d.n_train = 60;
  d.n_test = 100;
  return d;
}

}  // namespace

TEST_CASE("class anchors lie on the unit sphere") {
  Rng rng(1);
  const auto anchors = draw_class_anchors(5, 16, rng);
  REQUIRE(anchors.size() == 5);
  for (const auto& a : anchors) CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("random_orthogonal is orthogonal") {
  Rng rng(2);
  const Matrix q = random_orthogonal(8, rng);
  CHECK((q.transpose() * q).isApprox(Matrix::Identity(8, 8), 1e-12));
}

TEST_CASE("vanishing spread collapses each class to one point") {
  Rng rng(3);
  const auto anchors = draw_class_anchors(3, 4, rng);
  const DomainSpec d = domain(0, 1e-300, 9);
  const std::vector<int> labels = {0, 1, 0, 2, 1, 0};
  const auto samples = sample_domain(anchors, d, labels, rng);
  CHECK(samples[0].x == samples[2].x);
  CHECK(samples[0].x == samples[5].x);
  CHECK(samples[1].x == samples[4].x);
  CHECK(samples[0].x.norm() == doctest::Approx(1.0));
}

TEST_CASE("domains sharing a transform seed and spread are identically distributed") {
  Rng anchor_rng(4);
  const auto anchors = draw_class_anchors(3, 5, anchor_rng);
  const std::vector<int> labels = balanced_labels(30, 3);
  Rng a(77), b(77);
  const auto xs = sample_domain(anchors, domain(0, 0.3, 5), labels, a);
  const auto ys = sample_domain(anchors, domain(1, 0.3, 5), labels, b);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(xs[i].x == ys[i].x);
}

TEST_CASE("hard domains scatter more than easy ones") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::vector<DomainSpec> specs = {domain(0, 0.1, 1), domain(1, 0.8, 2)};
    const std::vector<int> cpd = {1, 1};
    const auto data = generate_domains(5, 16, specs, cpd, PartitionSpec{}, rng);
    const double easy = mean_within_class_distance(data.domain_tests[0], 5);
    const double hard = mean_within_class_distance(data.domain_tests[1], 5);
    CHECK(hard > easy);
  }
}

TEST_CASE("within-class distance matches a direct computation") {
  std::vector<Sample> s = {{Vector::Zero(2), 0}, {Vector::Constant(2, 1.0), 0}, {Vector::Zero(2), 1}};
  s[1].x << 3, 4;
  CHECK(mean_within_class_distance(s, 2) == doctest::Approx(5.0));
}

TEST_CASE("dirichlet partition with one client keeps everything") {
  Rng rng(5);
  const auto labels = balanced_labels(40, 4);
  const auto parts = dirichlet_partition(labels, 4, 0.5, 1, rng);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].size() == 40);
  check_exact_partition(parts, 40);
}

TEST_CASE("dirichlet partition is exact for any alpha") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const int n = 1 + static_cast<int>(rng.uniform_index(300));
    const int classes = 2 + static_cast<int>(rng.uniform_index(6));
    const int k = 1 + static_cast<int>(rng.uniform_index(8));
    const double alpha = std::pow(10.0, rng.uniform(-2.0, 2.0));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(classes)));
    const auto parts = dirichlet_partition(labels, classes, alpha, k, rng);
    CHECK(parts.size() == static_cast<std::size_t>(k));
    check_exact_partition(parts, labels.size());
  }
}

TEST_CASE("small alpha disperses class shares more than large alpha") {
  const auto labels = balanced_labels(1000, 5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng a(seed), b(seed);
    const double skewed = class_share_dispersion(dirichlet_partition(labels, 5, 0.5, 4, a), labels, 5);
    const double flat = class_share_dispersion(dirichlet_partition(labels, 5, 100.0, 4, b), labels, 5);
    CHECK(skewed > flat);
  }
}

TEST_CASE("dirichlet partition rejects bad arguments") {
  Rng rng(6);
  const auto labels = balanced_labels(10, 2);
  CHECK_THROWS_AS(dirichlet_partition(labels, 2, 0.0, 2, rng), std::invalid_argument);
  CHECK_THROWS_AS(dirichlet_partition(labels, 2, 0.5, 0, rng), std::invalid_argument);
}

TEST_CASE("generate_domains layout") {
  const std::vector<DomainSpec> specs = {domain(0, 0.1, 1), domain(1, 0.5, 2), domain(2, 0.8, 3)};
  const std::vector<int> cpd = {1, 3, 2};
  for (auto kind : {PartitionKind::kIid, PartitionKind::kDirichlet}) {
    Rng rng(7);
    const auto data = generate_domains(4, 6, specs, cpd, PartitionSpec{kind, 0.5}, rng);
    CHECK(data.num_classes == 4);
    CHECK(data.input_dim == 6);
    REQUIRE(data.clients.size() == 6);
    CHECK(data.domain_tests.size() == 3);
    std::vector<int> ids;
    std::size_t total = 0;
    for (const auto& c : data.clients) {
      ids.push_back(c.client_id);
      CHECK(!c.train.empty());
      total += c.train.size();
      for (const auto& s : c.train) {
        CHECK(s.y >= 0);
        CHECK(s.y < 4);
        CHECK(s.x.size() == 6);
        CHECK(all_finite(s.x));
      }
    }
    CHECK(ids == std::vector<int>{0, 1, 2, 3, 4, 5});
    CHECK(data.clients[0].domain_id == 0);
    CHECK(data.clients[3].domain_id == 1);
    CHECK(data.clients[5].domain_id == 2);
    CHECK(data.domain_tests[1].size() == 100);
    if (kind == PartitionKind::kIid) {
      CHECK(total == 6 * 60);
      for (const auto& c : data.clients) {
        std::vector<int> per(4, 0);
        for (const auto& s : c.train) ++per[static_cast<std::size_t>(s.y)];
        CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
      }
    } else {
      CHECK(total >= 6 * 60 - 1);
      CHECK(total <= 6 * 60);
    }
  }
}

TEST_CASE("generate_domains is reproducible and rejects bad input") {
  const std::vector<DomainSpec> specs = {domain(0, 0.1, 1), domain(1, 0.8, 2)};
  const std::vector<int> cpd = {1, 1};
  Rng a(8), b(8);
  const auto x = generate_domains(3, 4, specs, cpd, PartitionSpec{}, a);
  const auto y = generate_domains(3, 4, specs, cpd, PartitionSpec{}, b);
  for (std::size_t k = 0; k < x.clients.size(); ++k) {
    for (std::size_t i = 0; i < x.clients[k].train.size(); ++i) {
      CHECK(x.clients[k].train[i].x == y.clients[k].train[i].x);
      CHECK(x.clients[k].train[i].y == y.clients[k].train[i].y);
    }
  }
  Rng rng(9);
  CHECK_THROWS_AS(generate_domains(1, 4, specs, cpd, PartitionSpec{}, rng), std::invalid_argument);
  const std::vector<int> short_cpd = {1};
  CHECK_THROWS_AS(generate_domains(3, 4, specs, short_cpd, PartitionSpec{}, rng), std::invalid_argument);
  CHECK_THROWS_AS(generate_domains(3, 4, std::vector<DomainSpec>{}, std::vector<int>{}, PartitionSpec{}, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(domain(0, 0.0, 1).validate(), std::invalid_argument);
}
