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

#include "protofed/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace protofed {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw std::invalid_argument("config key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "expected a number");
  return out;
}

long long to_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "expected an integer");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "expected a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "expected true or false");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

PrototypeMode to_mode(const std::string& key, const std::string& value) {
  if (value == "average") return PrototypeMode::kAverage;
  if (value == "cluster") return PrototypeMode::kCluster;
  bad_value(key, value, "expected average or cluster");
}

ClusterBackend to_backend(const std::string& key, const std::string& value) {
  if (value == "finch") return ClusterBackend::kFinch;
  if (value == "kmeans") return ClusterBackend::kKMeans;
  if (value == "kmeans_adaptive") return ClusterBackend::kKMeansAdaptive;
  bad_value(key, value, "expected finch, kmeans or kmeans_adaptive");
}

// Shortest text that parses back to exactly `v`.
std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& xs, Fn&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += fmt(xs[i]);
  }
  return out;
}

// Resizes the domain list to `n`, keeping existing entries.
void resize_domains(ExperimentConfig& c, std::size_t n) {
  const std::size_t old = c.domains.size();
  c.domains.resize(n);
  for (std::size_t i = old; i < n; ++i) {
    c.domains[i].name = "domain" + std::to_string(i);
    c.domains[i].transform_seed = i + 1;
  }
  for (std::size_t i = 0; i < n; ++i) c.domains[i].domain_id = static_cast<int>(i);
  c.clients_per_domain.resize(n, 1);
}

template <typename Fn>
void per_domain(ExperimentConfig& c, const std::string& key, const std::string& value, Fn&& set) {
  const auto items = split_list(value);
  if (items.size() != c.domains.size()) {
    bad_value(key, value, "expected " + std::to_string(c.domains.size()) + " comma-separated entries, one per domain");
  }
  for (std::size_t i = 0; i < items.size(); ++i) set(c.domains[i], items[i]);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"seeds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const auto& item : split_list(v)) c.seeds.push_back(to_u64(k, item));
       }},
      {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seeds = {to_u64(k, v)}; }},
      {"rounds", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rounds = static_cast<int>(to_int(k, v)); }},
      {"local_epochs",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.local_epochs = static_cast<int>(to_int(k, v)); }},
      {"batch_size",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.batch_size = static_cast<int>(to_int(k, v)); }},
      {"input_dim",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.shape.input_dim = static_cast<int>(to_int(k, v)); }},
      {"hidden_dims",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.shape.hidden_dims.clear();
         for (const auto& item : split_list(v)) c.shape.hidden_dims.push_back(static_cast<int>(to_int(k, item)));
       }},
      {"feature_dim",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.shape.feature_dim = static_cast<int>(to_int(k, v)); }},
      {"num_classes",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.shape.num_classes = static_cast<int>(to_int(k, v)); }},
      {"learning_rate", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.learning_rate = to_double(k, v); }},
      {"momentum", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.momentum = to_double(k, v); }},
      {"weight_decay", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.weight_decay = to_double(k, v); }},
      {"tau", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.tau = to_double(k, v); }},
      {"alpha", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.alpha = to_double(k, v); }},
      {"lambda", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.lambda = to_double(k, v); }},
      {"contrast", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.contrast_enabled = to_bool(k, v); }},
      {"correction",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.loss.correction_enabled = to_bool(k, v); }},
      {"local_mode", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.local_mode = to_mode(k, v); }},
      {"global_mode", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.global_mode = to_mode(k, v); }},
      {"broadcast_local_prototypes",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.broadcast_local_prototypes = to_bool(k, v); }},
      {"clustering_backend",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.clustering_backend = to_backend(k, v); }},
      {"kmeans_k", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.kmeans_k = static_cast<int>(to_int(k, v)); }},
      {"member_weighted_average",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member_weighted_average = to_bool(k, v); }},
      {"privacy", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.privacy.enabled = to_bool(k, v); }},
      {"privacy_scale", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.privacy.scale = to_double(k, v); }},
      {"privacy_coefficient",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.privacy.perturbation_coefficient = to_double(k, v); }},
      {"dp_sgd", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.dp_sgd = to_bool(k, v); }},
      {"partition",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "iid") {
           c.partition.kind = PartitionKind::kIid;
         } else if (v == "dirichlet") {
           c.partition.kind = PartitionKind::kDirichlet;
         } else {
           bad_value(k, v, "expected iid or dirichlet");
         }
       }},
      {"dirichlet_alpha",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.partition.dirichlet_alpha = to_double(k, v); }},
      {"domain_spreads",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto items = split_list(v);
         if (items.empty()) bad_value(k, v, "at least one domain is required");
         resize_domains(c, items.size());
         for (std::size_t i = 0; i < items.size(); ++i) c.domains[i].spread = to_double(k, items[i]);
       }},
      {"domain_names",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         per_domain(c, k, v, [](DomainSpec& d, const std::string& item) { d.name = item; });
       }},
      {"domain_transform_seeds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         per_domain(c, k, v, [&k](DomainSpec& d, const std::string& item) { d.transform_seed = to_u64(k, item); });
       }},
      {"domain_n_train",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         per_domain(c, k, v, [&k](DomainSpec& d, const std::string& item) { d.n_train = static_cast<int>(to_int(k, item)); });
       }},
      {"domain_n_test",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         per_domain(c, k, v, [&k](DomainSpec& d, const std::string& item) { d.n_test = static_cast<int>(to_int(k, item)); });
       }},
      {"n_train",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         for (auto& d : c.domains) d.n_train = static_cast<int>(to_int(k, v));
       }},
      {"n_test",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         for (auto& d : c.domains) d.n_test = static_cast<int>(to_int(k, v));
       }},
      {"clients_per_domain",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.clients_per_domain.clear();
         for (const auto& item : split_list(v)) c.clients_per_domain.push_back(static_cast<int>(to_int(k, item)));
       }},
      {"participation", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.participation = to_double(k, v); }},
      {"parallelism",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.parallelism = static_cast<int>(to_int(k, v)); }},
  };
  return table;
}

const Setter* find_setter(const std::string& key) {
  for (const auto& [name, fn] : setters()) {
    if (name == key) return &fn;
  }
  return nullptr;
}

}  // namespace

std::vector<DomainSpec> default_domains() {
  const double spreads[] = {0.1, 0.3, 0.5, 0.8};
  const char* names[] = {"easy", "medium", "harder", "hard"};
  std::vector<DomainSpec> out;
  for (int i = 0; i < 4; ++i) {
    out.push_back(DomainSpec{i, names[i], spreads[i], static_cast<std::uint64_t>(i + 1), 100, 500});
  }
  return out;
}

ExperimentConfig::ExperimentConfig() : domains(default_domains()), clients_per_domain(4, 1) {}

int ExperimentConfig::num_clients() const {
  int n = 0;
  for (int c : clients_per_domain) n += c;
  return n;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
  };
  if (seeds.empty()) fail("seeds", "at least one seed is required");
  if (rounds < 0) fail("rounds", "must be >= 0");
  if (local_epochs < 1) fail("local_epochs", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (shape.input_dim < 1) fail("input_dim", "must be >= 1");
  if (shape.feature_dim < 1) fail("feature_dim", "must be >= 1");
  if (shape.num_classes < 2) fail("num_classes", "must be >= 2");
  for (int h : shape.hidden_dims) {
    if (h < 1) fail("hidden_dims", "entries must be >= 1");
  }
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay", "must be >= 0");
  if (!(loss.tau > 0.0)) fail("tau", "must be > 0");
  if (!(loss.alpha > 0.0 && loss.alpha <= 1.0)) fail("alpha", "must lie in (0, 1]");
  if (!(loss.lambda >= 0.0)) fail("lambda", "must be >= 0");
  if (kmeans_k < 1) fail("kmeans_k", "must be >= 1");
  if (!(privacy.scale >= 0.0)) fail("privacy_scale", "must be >= 0");
  if (!(privacy.perturbation_coefficient >= 0.0 && privacy.perturbation_coefficient <= 1.0)) {
    fail("privacy_coefficient", "must lie in [0, 1]");
  }
  if (dp_sgd)
    fail("dp_sgd",
         "DP-SGD model perturbation is not supported; only prototype perturbation (privacy = true) is available");
  if (!(partition.dirichlet_alpha > 0.0)) fail("dirichlet_alpha", "must be > 0");
  if (domains.empty()) fail("domain_spreads", "at least one domain is required");
  for (const auto& d : domains) {
    if (!(d.spread > 0.0)) fail("domain_spreads", "every spread must be > 0");
    if (d.n_train < 1) fail("domain_n_train", "must be >= 1");
    if (d.n_test < 1) fail("domain_n_test", "must be >= 1");
  }
  if (clients_per_domain.size() != domains.size()) fail("clients_per_domain", "needs one entry per domain");
  for (int c : clients_per_domain) {
    if (c < 1) fail("clients_per_domain", "entries must be >= 1");
  }
  if (!(participation > 0.0 && participation <= 1.0)) fail("participation", "must lie in (0, 1]");
  if (parallelism < 1) fail("parallelism", "must be >= 1");
}

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const Setter* setter = find_setter(key);
  if (setter == nullptr) throw std::invalid_argument("unknown config key '" + key + "'");
  (*setter)(config, key, value);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override '" + assignment + "' is not key=value");
  set_config_value(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(t.substr(0, eq));
    if (find_setter(key) == nullptr) throw std::invalid_argument("unknown config key '" + key + "'");
    entries.emplace_back(std::move(key), trim(t.substr(eq + 1)));
  }
  // domain_spreads resizes the domain list; apply it before the per-domain keys.
  std::stable_partition(entries.begin(), entries.end(), [](const auto& e) { return e.first == "domain_spreads"; });
  ExperimentConfig config;
  for (const auto& [key, value] : entries) set_config_value(config, key, value);
  config.validate();
  return config;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto line = [&os](const char* key, const std::string& value) { os << key << " = " << value << "\n"; };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  auto num = [](auto v) { return std::to_string(v); };
  line("seeds", join(c.seeds, num));
  line("rounds", num(c.rounds));
  line("local_epochs", num(c.local_epochs));
  line("batch_size", num(c.batch_size));
  line("input_dim", num(c.shape.input_dim));
  line("hidden_dims", join(c.shape.hidden_dims, num));
  line("feature_dim", num(c.shape.feature_dim));
  line("num_classes", num(c.shape.num_classes));
  line("learning_rate", fmt_double(c.learning_rate));
  line("momentum", fmt_double(c.momentum));
  line("weight_decay", fmt_double(c.weight_decay));
  line("tau", fmt_double(c.loss.tau));
  line("alpha", fmt_double(c.loss.alpha));
  line("lambda", fmt_double(c.loss.lambda));
  line("contrast", flag(c.loss.contrast_enabled));
  line("correction", flag(c.loss.correction_enabled));
  line("local_mode", std::string(to_string(c.local_mode)));
  line("global_mode", std::string(to_string(c.global_mode)));
  line("broadcast_local_prototypes", flag(c.broadcast_local_prototypes));
  line("clustering_backend", std::string(to_string(c.clustering_backend)));
  line("kmeans_k", num(c.kmeans_k));
  line("member_weighted_average", flag(c.member_weighted_average));
  line("privacy", flag(c.privacy.enabled));
  line("privacy_scale", fmt_double(c.privacy.scale));
  line("privacy_coefficient", fmt_double(c.privacy.perturbation_coefficient));
  line("dp_sgd", flag(c.dp_sgd));
  line("partition", c.partition.kind == PartitionKind::kIid ? "iid" : "dirichlet");
  line("dirichlet_alpha", fmt_double(c.partition.dirichlet_alpha));
  line("domain_spreads", join(c.domains, [](const DomainSpec& d) { return fmt_double(d.spread); }));
  line("domain_names", join(c.domains, [](const DomainSpec& d) { return d.name; }));
  line("domain_transform_seeds", join(c.domains, [](const DomainSpec& d) { return std::to_string(d.transform_seed); }));
  line("domain_n_train", join(c.domains, [](const DomainSpec& d) { return std::to_string(d.n_train); }));
  line("domain_n_test", join(c.domains, [](const DomainSpec& d) { return std::to_string(d.n_test); }));
  line("clients_per_domain", join(c.clients_per_domain, num));
  line("participation", fmt_double(c.participation));
  line("parallelism", num(c.parallelism));
  return os.str();
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace protofed
