//
// Copyright 2026 The FedFair Authors
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
//
#include "fedfair/data_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "fmt/ranges.h"
#include "fmt/printf.h"
#include "fedfair/internal/keyed_random.h"
#include "json.hpp"

namespace fedfair {
namespace {

double Uniform(std::mt19937_64& rng) { return internal::ToUnitInterval(rng()); }

// Index drawn from unnormalized non-negative weights.
size_t Categorical(std::span<const double> weights, std::mt19937_64& rng) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = Uniform(rng) * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u just past the last bucket.
  for (size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

// floor(n * w_i) plus one for the largest fractional parts until the counts
// sum to n. Ties go to the lower index.
std::vector<size_t> LargestRemainder(size_t n, std::span<const double> weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<size_t> counts(weights.size(), 0);
  std::vector<std::pair<double, size_t>> frac;
  size_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    double exact = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<size_t>(std::floor(exact));
    assigned += counts[i];
    frac.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  for (size_t i = 0; assigned < n; ++i, ++assigned) {
    ++counts[frac[i % frac.size()].second];
  }
  return counts;
}

absl::Status CheckDistribution(std::span<const double> w, std::string_view what) {
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      return absl::InvalidArgumentError(fmt::format("{} has a bad entry", what));
    }
    total += v;
  }
  if (!(total > 0.0)) {
    return absl::InvalidArgumentError(fmt::format("{} sums to zero", what));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status SyntheticConfig::Validate() const {
  if (num_classes < 2) return absl::InvalidArgumentError("need >= 2 classes");
  if (num_groups < 1) return absl::InvalidArgumentError("need >= 1 group");
  if (num_clients < 1) return absl::InvalidArgumentError("need >= 1 client");
  if (examples_per_client < 1) {
    return absl::InvalidArgumentError("zero examples per client");
  }
  if (!group_proportions.empty()) {
    if (group_proportions.size() != num_groups) {
      return absl::InvalidArgumentError("group_proportions size");
    }
    if (absl::Status s = CheckDistribution(group_proportions,
                                           "group_proportions");
        !s.ok()) {
      return s;
    }
  }
  if (!group_bias.empty()) {
    if (group_bias.size() != size_t{num_groups} * num_classes) {
      return absl::InvalidArgumentError("group_bias must be groups x classes");
    }
    for (uint32_t g = 0; g < num_groups; ++g) {
      std::span<const double> row(group_bias.data() + g * num_classes,
                                  num_classes);
      if (absl::Status s = CheckDistribution(row, "group_bias row"); !s.ok()) {
        return s;
      }
    }
  }
  if (!(model_accuracy > 0.0 && model_accuracy <= 1.0)) {
    return absl::InvalidArgumentError("model_accuracy must lie in (0, 1]");
  }
  if (!group_accuracy.empty()) {
    if (group_accuracy.size() != num_groups) {
      return absl::InvalidArgumentError("group_accuracy size");
    }
    for (double a : group_accuracy) {
      if (!(a >= 0.0 && a <= 1.0)) {
        return absl::InvalidArgumentError("group_accuracy outside [0, 1]");
      }
    }
  }
  if (!(margin > 0.0)) return absl::InvalidArgumentError("margin must be > 0");
  if (!(jitter >= 0.0 && jitter < margin)) {
    return absl::InvalidArgumentError("jitter must lie in [0, margin)");
  }
  if (!(temperature > 0.0)) {
    return absl::InvalidArgumentError("temperature must be > 0");
  }
  if (!iid && !(concentration > 0.0)) {
    return absl::InvalidArgumentError("concentration must be > 0");
  }
  double total = 0.0;
  for (double f : split) {
    if (!(f >= 0.0)) return absl::InvalidArgumentError("negative split share");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    return absl::InvalidArgumentError("split fractions must sum to 1");
  }
  if (!(homophily >= 0.0 && homophily <= 1.0)) {
    return absl::InvalidArgumentError("homophily must lie in [0, 1]");
  }
  return absl::OkStatus();
}

double SyntheticConfig::AccuracyFor(GroupId g) const {
  return group_accuracy.empty() ? model_accuracy : group_accuracy[g];
}

double SyntheticConfig::ClassProbability(GroupId g, Label y) const {
  if (group_bias.empty()) return 1.0 / num_classes;
  std::span<const double> row(group_bias.data() + g * num_classes,
                              num_classes);
  return row[y] / std::accumulate(row.begin(), row.end(), 0.0);
}

ProbabilityVector DrawProbabilities(const SyntheticConfig& config, GroupId g,
                                    Label label, std::mt19937_64& rng) {
  const uint32_t c = config.num_classes;
  Label pred = label;
  if (Uniform(rng) >= config.AccuracyFor(g)) {
    // A uniformly chosen wrong class.
    Label other = static_cast<Label>(Uniform(rng) * (c - 1));
    pred = std::min<Label>(other, c - 2);
    if (pred >= label) ++pred;
  }
  std::vector<double> logits(c);
  for (Label y = 0; y < c; ++y) {
    logits[y] = ((y == pred ? config.margin : 0.0) +
                 Uniform(rng) * config.jitter) /
                config.temperature;
  }
  double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logits) v /= total;
  // A softmax output sums to 1 within a few ulps.
  return *ProbabilityVector::Create(std::move(logits));
}

LabeledDraw DrawExample(const SyntheticConfig& config, std::mt19937_64& rng) {
  LabeledDraw d;
  if (config.group_proportions.empty()) {
    d.group = static_cast<GroupId>(
        std::min<double>(Uniform(rng) * config.num_groups, config.num_groups - 1));
  } else {
    d.group = static_cast<GroupId>(Categorical(config.group_proportions, rng));
  }
  std::vector<double> class_weights(config.num_classes);
  for (Label y = 0; y < config.num_classes; ++y) {
    class_weights[y] = config.ClassProbability(d.group, y);
  }
  d.label = static_cast<Label>(Categorical(class_weights, rng));
  d.probs = DrawProbabilities(config, d.group, d.label, rng);
  return d;
}

std::vector<ClientId> DirichletPartition(std::span<const Label> labels,
                                         uint32_t num_clients,
                                         double concentration, uint64_t seed) {
  std::vector<ClientId> assignment(labels.size(), 0);
  if (num_clients <= 1) return assignment;
  std::mt19937_64 rng(seed);
  std::map<Label, std::vector<size_t>> by_class;
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> share(num_clients);
  for (auto& [label, members] : by_class) {
    double total = 0.0;
    for (double& s : share) {
      s = gamma(rng);
      total += s;
    }
    // Tiny concentrations can underflow every draw.
    if (!(total > 0.0)) std::fill(share.begin(), share.end(), 1.0);
    std::vector<size_t> counts = LargestRemainder(members.size(), share);
    std::shuffle(members.begin(), members.end(), rng);
    size_t pos = 0;
    for (ClientId k = 0; k < num_clients; ++k) {
      for (size_t n = 0; n < counts[k]; ++n) assignment[members[pos++]] = k;
    }
  }
  return assignment;
}

absl::StatusOr<SplitAssignment> StratifiedSplit(
    std::span<const Label> labels, std::span<const GroupId> groups,
    const SplitFractions& fractions) {
  if (labels.size() != groups.size()) {
    return absl::InvalidArgumentError("labels and groups differ in length");
  }
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) return absl::InvalidArgumentError("negative split share");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    return absl::InvalidArgumentError("split fractions must sum to 1");
  }
  std::map<std::pair<Label, GroupId>, std::vector<size_t>> strata;
  for (size_t i = 0; i < labels.size(); ++i) {
    strata[{labels[i], groups[i]}].push_back(i);
  }
  SplitAssignment out;
  out.splits.assign(labels.size(), Split::kTrain);
  constexpr Split kOrder[] = {Split::kTrain, Split::kValid, Split::kCalib,
                              Split::kTest};
  for (const auto& [key, members] : strata) {
    if (members.size() < 4) {
      out.warnings.push_back(fmt::sprintf(
          "stratum (label %d, group %d) has %d examples; split is best effort",
          key.first, key.second, members.size()));
    }
    std::vector<size_t> counts = LargestRemainder(members.size(), fractions);
    size_t pos = 0;
    for (int s = 0; s < 4; ++s) {
      for (size_t n = 0; n < counts[s]; ++n) {
        out.splits[members[pos++]] = kOrder[s];
      }
    }
  }
  return out;
}

absl::StatusOr<Federation> GenerateSynthetic(const SyntheticConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  std::mt19937_64 rng(internal::KeyedSeed({config.seed, 0x67656e}));
  const size_t total = size_t{config.num_clients} * config.examples_per_client;

  std::vector<LabeledDraw> draws;
  draws.reserve(total);
  for (size_t i = 0; i < total; ++i) draws.push_back(DrawExample(config, rng));

  std::vector<Label> labels(total);
  std::vector<GroupId> groups(total);
  for (size_t i = 0; i < total; ++i) {
    labels[i] = draws[i].label;
    groups[i] = draws[i].group;
  }

  std::vector<ClientId> owner(total);
  if (config.iid) {
    std::vector<size_t> perm(total);
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (size_t pos = 0; pos < total; ++pos) {
      owner[perm[pos]] = static_cast<ClientId>(pos / config.examples_per_client);
    }
  } else {
    owner = DirichletPartition(labels, config.num_clients, config.concentration,
                               internal::KeyedSeed({config.seed, 0x646972}));
  }

  Federation fed;
  fed.num_classes = config.num_classes;
  fed.num_groups = config.num_groups;
  for (uint32_t y = 0; y < config.num_classes; ++y) {
    fed.class_names.push_back(fmt::format("class_{}", y));
  }
  for (uint32_t g = 0; g < config.num_groups; ++g) {
    fed.group_names.push_back(fmt::format("group_{}", g));
  }

  for (ClientId k = 0; k < config.num_clients; ++k) {
    std::vector<size_t> members;
    for (size_t i = 0; i < total; ++i) {
      if (owner[i] == k) members.push_back(i);
    }
    std::vector<Label> member_labels;
    std::vector<GroupId> member_groups;
    for (size_t i : members) {
      member_labels.push_back(labels[i]);
      member_groups.push_back(groups[i]);
    }
    absl::StatusOr<SplitAssignment> split =
        StratifiedSplit(member_labels, member_groups, config.split);
    if (!split.ok()) return split.status();

    // Neighbourhoods, symmetrised, over the client's examples.
    std::vector<std::vector<size_t>> adjacency(members.size());
    if (config.graph_degree > 0 && members.size() > 1) {
      std::map<Label, std::vector<size_t>> same_label;
      for (size_t m = 0; m < members.size(); ++m) {
        same_label[member_labels[m]].push_back(m);
      }
      for (size_t m = 0; m < members.size(); ++m) {
        const std::vector<size_t>& pool = same_label[member_labels[m]];
        for (uint32_t d = 0; d < config.graph_degree; ++d) {
          size_t pick;
          if (pool.size() > 1 && Uniform(rng) < config.homophily) {
            pick = pool[static_cast<size_t>(Uniform(rng) * pool.size())];
          } else {
            pick = static_cast<size_t>(Uniform(rng) * members.size());
          }
          if (pick == m) continue;
          adjacency[m].push_back(pick);
          adjacency[pick].push_back(m);
        }
      }
      for (std::vector<size_t>& a : adjacency) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
      }
    }

    ClientDataset client;
    client.client_id = k;
    for (size_t m = 0; m < members.size(); ++m) {
      size_t i = members[m];
      Example e;
      e.example_id = i;
      e.client_id = k;
      e.split = split->splits[m];
      e.true_label = labels[i];
      e.group_id = groups[i];
      e.probs = draws[i].probs;
      for (size_t n : adjacency[m]) e.neighbors.push_back(members[n]);
      switch (e.split) {
        case Split::kCalib:
          client.calib.push_back(std::move(e));
          break;
        case Split::kTest:
          client.test.push_back(std::move(e));
          break;
        default:
          client.other.push_back(std::move(e));
      }
    }
    fed.clients.push_back(std::move(client));
  }
  return fed;
}

absl::Status WriteFederationCsv(const Federation& federation,
                                std::ostream& out) {
  out << "example_id,client_id,split,true_label,group_id";
  for (uint32_t y = 0; y < federation.num_classes; ++y) out << ",p_" << y;
  out << ",neighbors\n";
  for (const ClientDataset& c : federation.clients) {
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) {
        if (e.probs.size() != federation.num_classes) {
          return absl::InvalidArgumentError(fmt::sprintf(
              "example %d has %d probabilities", e.example_id, e.probs.size()));
        }
        std::string line = fmt::sprintf("%d,%d,%s,%d,%d", e.example_id,
                                           e.client_id, SplitName(e.split),
                                           e.true_label, e.group_id);
        for (double p : e.probs.values()) {
          line += fmt::sprintf(",%.17g", p);
        }
        line += fmt::format(",{}\n", fmt::join(e.neighbors, ";"));
        out << line;
      }
    }
  }
  if (!out) return absl::DataLossError("write failed");
  return absl::OkStatus();
}

namespace {

absl::Status LineError(size_t line, std::string_view message) {
  return absl::InvalidArgumentError(fmt::format("line {}: {}", line, message));
}

template <typename T>
bool ParseUnsigned(std::string_view s, T* out) {
  uint64_t v;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty() ||
      v > std::numeric_limits<T>::max()) {
    return false;
  }
  *out = static_cast<T>(v);
  return true;
}

bool ParseDouble(std::string_view s, double* out) {
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && end == s.data() + s.size() && !s.empty();
}

std::vector<std::string_view> SplitFields(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view StripCr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

absl::StatusOr<Federation> ReadFederationCsv(std::istream& in,
                                             uint32_t num_groups) {
  std::string header;
  if (!std::getline(in, header)) return absl::InvalidArgumentError("empty file");
  std::vector<std::string> cols;
  for (std::string_view c : SplitFields(StripCr(header), ',')) cols.emplace_back(c);
  const std::vector<std::string> fixed = {"example_id", "client_id", "split",
                                          "true_label", "group_id"};
  for (size_t i = 0; i < fixed.size(); ++i) {
    if (i >= cols.size() || cols[i] != fixed[i]) {
      return absl::InvalidArgumentError(
          fmt::format("missing column {}", fixed[i]));
    }
  }
  if (cols.back() != "neighbors") {
    return absl::InvalidArgumentError("missing column neighbors");
  }
  const size_t num_prob_cols = cols.size() - fixed.size() - 1;
  for (size_t y = 0; y < num_prob_cols; ++y) {
    std::string want = fmt::format("p_{}", y);
    if (cols[fixed.size() + y] != want) {
      return absl::InvalidArgumentError(fmt::format("missing column {}", want));
    }
  }
  if (num_prob_cols < 2) {
    return absl::InvalidArgumentError(
        fmt::format("missing column p_{}", num_prob_cols));
  }

  Federation fed;
  fed.num_classes = static_cast<uint32_t>(num_prob_cols);
  std::map<ClientId, ClientDataset> clients;
  std::unordered_set<ExampleId> seen;
  uint32_t max_group = 0;
  std::string raw;
  size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = StripCr(raw);
    if (line.empty()) continue;
    std::vector<std::string_view> f = SplitFields(line, ',');
    if (f.size() != cols.size()) {
      return LineError(line_no, fmt::sprintf("expected %d fields, got %d",
                                                cols.size(), f.size()));
    }
    Example e;
    if (!ParseUnsigned(f[0], &e.example_id)) {
      return LineError(line_no, "bad example_id");
    }
    if (!ParseUnsigned(f[1], &e.client_id)) {
      return LineError(line_no, "bad client_id");
    }
    absl::StatusOr<Split> split = ParseSplit(f[2]);
    if (!split.ok()) return LineError(line_no, std::string(split.status().message()));
    e.split = *split;
    if (!ParseUnsigned(f[3], &e.true_label) ||
        e.true_label >= fed.num_classes) {
      return LineError(line_no, "bad true_label");
    }
    if (!ParseUnsigned(f[4], &e.group_id) ||
        (num_groups > 0 && e.group_id >= num_groups)) {
      return LineError(line_no, "bad group_id");
    }
    std::vector<double> probs(num_prob_cols);
    for (size_t y = 0; y < num_prob_cols; ++y) {
      if (!ParseDouble(f[fixed.size() + y], &probs[y])) {
        return LineError(line_no, fmt::format("bad value in p_{}", y));
      }
    }
    absl::StatusOr<ProbabilityVector> pv =
        ProbabilityVector::Create(std::move(probs));
    if (!pv.ok()) return LineError(line_no, std::string(pv.status().message()));
    e.probs = *std::move(pv);
    if (!f.back().empty()) {
      for (std::string_view n : SplitFields(f.back(), ';')) {
        ExampleId id;
        if (!ParseUnsigned(n, &id)) return LineError(line_no, "bad neighbor id");
        e.neighbors.push_back(id);
      }
    }
    if (!seen.insert(e.example_id).second) {
      return LineError(line_no, "duplicate example_id");
    }
    max_group = std::max(max_group, e.group_id);
    ClientDataset& c = clients[e.client_id];
    c.client_id = e.client_id;
    switch (e.split) {
      case Split::kCalib:
        c.calib.push_back(std::move(e));
        break;
      case Split::kTest:
        c.test.push_back(std::move(e));
        break;
      default:
        c.other.push_back(std::move(e));
    }
  }
  fed.num_groups = num_groups > 0 ? num_groups : max_group + 1;
  for (auto& [id, c] : clients) {
    std::unordered_set<ExampleId> local;
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) local.insert(e.example_id);
    }
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) {
        for (ExampleId n : e.neighbors) {
          if (!local.contains(n)) {
            return absl::InvalidArgumentError(fmt::sprintf(
                "example %d: neighbor %d is not on client %d", e.example_id, n,
                id));
          }
        }
      }
    }
    fed.clients.push_back(std::move(c));
  }
  for (uint32_t y = 0; y < fed.num_classes; ++y) {
    fed.class_names.push_back(fmt::format("class_{}", y));
  }
  for (uint32_t g = 0; g < fed.num_groups; ++g) {
    fed.group_names.push_back(fmt::format("group_{}", g));
  }
  return fed;
}

std::string MetadataPath(const std::string& csv_path) {
  return csv_path + ".meta.json";
}

absl::Status SaveFederation(const Federation& federation,
                            const std::string& path) {
  std::ofstream csv(path, std::ios::binary | std::ios::trunc);
  if (!csv) return absl::UnavailableError(fmt::format("cannot open {}", path));
  if (absl::Status s = WriteFederationCsv(federation, csv); !s.ok()) return s;
  nlohmann::json meta = {
      {"num_classes", federation.num_classes},
      {"num_groups", federation.num_groups},
      {"class_names", federation.class_names},
      {"group_names", federation.group_names},
  };
  std::ofstream side(MetadataPath(path), std::ios::trunc);
  if (!side) {
    return absl::UnavailableError(
        fmt::format("cannot open {}", MetadataPath(path)));
  }
  side << meta.dump(2) << "\n";
  if (!side) return absl::DataLossError("write failed");
  return absl::OkStatus();
}

absl::StatusOr<Federation> LoadFederation(const std::string& path) {
  std::ifstream csv(path, std::ios::binary);
  if (!csv) return absl::NotFoundError(fmt::format("cannot open {}", path));

  nlohmann::json meta;
  bool has_meta = std::filesystem::exists(MetadataPath(path));
  if (has_meta) {
    std::ifstream side(MetadataPath(path));
    meta = nlohmann::json::parse(side, nullptr, /*allow_exceptions=*/false);
    if (meta.is_discarded() || !meta.is_object()) {
      return absl::InvalidArgumentError(
          fmt::format("malformed metadata {}", MetadataPath(path)));
    }
  }
  uint32_t num_groups = has_meta ? meta.value("num_groups", 0u) : 0u;
  absl::StatusOr<Federation> fed = ReadFederationCsv(csv, num_groups);
  if (!fed.ok()) {
    return absl::Status(fed.status().code(),
                        fmt::format("{}: {}", path, std::string(fed.status().message())));
  }
  if (has_meta) {
    if (meta.value("num_classes", 0u) != fed->num_classes) {
      return absl::InvalidArgumentError(
          "metadata class count disagrees with the CSV");
    }
    auto classes =
        meta.value("class_names", std::vector<std::string>{});
    auto groups = meta.value("group_names", std::vector<std::string>{});
    if (classes.size() == fed->num_classes) fed->class_names = classes;
    if (groups.size() == fed->num_groups) fed->group_names = groups;
  }
  return fed;
}

}  // namespace fedfair
