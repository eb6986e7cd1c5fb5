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

#include "protofed/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace protofed {

void DomainSpec::validate() const {
  if (!(spread > 0.0)) throw std::invalid_argument("domain '" + name + "': spread must be > 0");
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("domain '" + name + "': n_train and n_test must be >= 1");
}

std::vector<Vector> draw_class_anchors(int num_classes, int input_dim, Rng& rng) {
  std::vector<Vector> anchors;
  anchors.reserve(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    Vector v(input_dim);
    do {
      for (Eigen::Index d = 0; d < v.size(); ++d) v[d] = rng.normal();
    } while (v.norm() < 1e-8);
    anchors.push_back(v.normalized());
  }
  return anchors;
}

Matrix random_orthogonal(int dim, Rng& rng) {
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }
  return q;
}

std::vector<Sample> sample_domain(const std::vector<Vector>& anchors, const DomainSpec& domain,
                                  std::span<const int> labels, Rng& rng) {
  const int dim = static_cast<int>(anchors.front().size());
  Rng transform_rng(mix_seed(domain.transform_seed));
  const Matrix rotation = random_orthogonal(dim, transform_rng);
  std::vector<Vector> rotated;
  rotated.reserve(anchors.size());
  for (const auto& a : anchors) rotated.push_back(rotation * a);

  std::vector<Sample> out;
  out.reserve(labels.size());
  for (int y : labels) {
    if (y < 0 || y >= static_cast<int>(anchors.size()))
      throw std::invalid_argument("sample_domain: label out of range");
    Vector x = rotated[static_cast<std::size_t>(y)];
    for (Eigen::Index d = 0; d < x.size(); ++d) x[d] += rng.normal(0.0, domain.spread);
    out.push_back(Sample{std::move(x), y});
  }
  return out;
}

std::vector<std::vector<int>> dirichlet_partition(std::span<const int> labels, int num_classes, double alpha,
                                                  int num_clients, Rng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
  if (num_clients < 1) throw std::invalid_argument("dirichlet_partition: need at least one client");
  const auto k = static_cast<std::size_t>(num_clients);
  std::vector<std::vector<int>> parts(k);
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(static_cast<int>(i));
    }
    std::vector<double> props(k);
    double total = 0.0;
    for (auto& p : props) {
      p = rng.gamma(alpha);
      total += p;
    }
    if (!(total > 0.0)) {
      std::fill(props.begin(), props.end(), 1.0 / static_cast<double>(k));
    } else {
      for (auto& p : props) p /= total;
    }
    if (idx.empty()) continue;

    const double n = static_cast<double>(idx.size());
    std::vector<std::size_t> counts(k);
    std::vector<double> remainders(k);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double exact = props[c] * n;
      counts[c] = static_cast<std::size_t>(std::floor(exact));
      remainders[c] = exact - std::floor(exact);
      assigned += counts[c];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; assigned < idx.size(); ++i, ++assigned) ++counts[order[i % k]];

    rng.shuffle(idx);
    std::size_t off = 0;
    for (std::size_t c = 0; c < k; ++c) {
      parts[c].insert(parts[c].end(), idx.begin() + static_cast<std::ptrdiff_t>(off),
                      idx.begin() + static_cast<std::ptrdiff_t>(off + counts[c]));
      off += counts[c];
    }
  }
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return parts;
}

FederatedDataset generate_domains(int num_classes, int input_dim, std::span<const DomainSpec> domains,
                                  std::span<const int> clients_per_domain, const PartitionSpec& partition, Rng& rng) {
  if (num_classes < 2) throw std::invalid_argument("generate_domains: need at least 2 classes");
  if (input_dim < 1) throw std::invalid_argument("generate_domains: input_dim must be >= 1");
  if (domains.empty()) throw std::invalid_argument("generate_domains: no domains");
  if (clients_per_domain.size() != domains.size()) {
    throw std::invalid_argument("generate_domains: clients_per_domain must have one entry per domain");
  }
  for (const auto& d : domains) d.validate();
  for (int c : clients_per_domain) {
    if (c < 1) throw std::invalid_argument("generate_domains: every domain needs at least one client");
  }

  FederatedDataset data;
  data.num_classes = num_classes;
  data.input_dim = input_dim;
  data.domains.assign(domains.begin(), domains.end());

  Rng anchor_rng = rng.fork(1);
  const std::vector<Vector> anchors = draw_class_anchors(num_classes, input_dim, anchor_rng);

  // Client -> domain position; clients are numbered domain by domain.
  std::vector<std::size_t> client_domain;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    for (int i = 0; i < clients_per_domain[d]; ++i) client_domain.push_back(d);
  }
  const std::size_t num_clients = client_domain.size();

  std::vector<std::vector<int>> client_labels(num_clients);
  auto balanced = [num_classes](int n) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % num_classes;
    return labels;
  };
  if (partition.kind == PartitionKind::kIid) {
    for (std::size_t k = 0; k < num_clients; ++k) {
      client_labels[k] = balanced(domains[client_domain[k]].n_train);
    }
  } else {
    int total = 0;
    for (std::size_t k = 0; k < num_clients; ++k) total += domains[client_domain[k]].n_train;
    const std::vector<int> pool = balanced(total);
    Rng split_rng = rng.fork(2);
    const auto parts =
        dirichlet_partition(pool, num_classes, partition.dirichlet_alpha, static_cast<int>(num_clients), split_rng);
    for (std::size_t k = 0; k < num_clients; ++k) {
      for (int i : parts[k]) client_labels[k].push_back(pool[static_cast<std::size_t>(i)]);
    }
    // Every client keeps at least one sample; take it from the largest client.
    for (std::size_t k = 0; k < num_clients; ++k) {
      if (!client_labels[k].empty()) continue;
      auto largest = std::max_element(client_labels.begin(), client_labels.end(),
                                      [](const auto& a, const auto& b) { return a.size() < b.size(); });
      client_labels[k].push_back(largest->back());
      largest->pop_back();
    }
  }

  for (std::size_t k = 0; k < num_clients; ++k) {
    Rng client_rng = rng.fork(1000 + k);
    client_rng.shuffle(client_labels[k]);
    const DomainSpec& domain = domains[client_domain[k]];
    data.clients.push_back(ClientData{static_cast<int>(k), domain.domain_id,
                                      sample_domain(anchors, domain, client_labels[k], client_rng)});
  }
  for (std::size_t d = 0; d < domains.size(); ++d) {
    Rng test_rng = rng.fork(500000 + d);
    const std::vector<int> labels = balanced(domains[d].n_test);
    data.domain_tests.push_back(sample_domain(anchors, domains[d], labels, test_rng));
  }
  return data;
}

double mean_within_class_distance(std::span<const Sample> samples, int num_classes) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (int cls = 0; cls < num_classes; ++cls) {
    std::vector<const Vector*> members;
    for (const auto& s : samples) {
      if (s.y == cls) members.push_back(&s.x);
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        total += (*members[i] - *members[j]).norm();
        ++pairs;
      }
    }
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

}  // namespace protofed
