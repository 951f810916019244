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
#include "fedfair/scores.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "fmt/printf.h"
#include "fedfair/internal/keyed_random.h"

namespace fedfair {

std::string_view ScoreKindName(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kAps:
      return "aps";
    case ScoreKind::kRaps:
      return "raps";
    case ScoreKind::kDaps:
      return "daps";
  }
  return "unknown";
}

absl::StatusOr<ScoreKind> ParseScoreKind(std::string_view name) {
  if (name == "aps" || name == "APS") return ScoreKind::kAps;
  if (name == "raps" || name == "RAPS") return ScoreKind::kRaps;
  if (name == "daps" || name == "DAPS") return ScoreKind::kDaps;
  return absl::InvalidArgumentError(
      fmt::format("unknown score kind '{}'", name));
}

absl::Status ScoreConfig::Validate() const {
  if (!(nu >= 0.0) || !std::isfinite(nu)) {
    return absl::InvalidArgumentError("nu must be a finite value >= 0");
  }
  if (!(diffusion >= 0.0 && diffusion <= 1.0)) {
    return absl::InvalidArgumentError("diffusion must lie in [0, 1]");
  }
  if (daps_base == ScoreKind::kDaps) {
    return absl::InvalidArgumentError("DAPS base score must be APS or RAPS");
  }
  return absl::OkStatus();
}

double ScoreMatrix::Max() const {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values_) m = std::max(m, v);
  return m;
}

std::vector<Label> DescendingOrder(std::span<const double> probs) {
  std::vector<Label> order(probs.size());
  std::iota(order.begin(), order.end(), Label{0});
  std::stable_sort(order.begin(), order.end(), [&](Label a, Label b) {
    return probs[a] > probs[b];
  });
  return order;
}

void RapsScoresInto(std::span<const double> probs, double u, double nu,
                    uint32_t k_reg, std::span<double> out) {
  std::vector<Label> order = DescendingOrder(probs);
  double cum = 0.0;
  for (size_t r = 0; r < order.size(); ++r) {
    Label y = order[r];
    cum += probs[y];
    double s = cum - u * probs[y];
    // r is 0-based; the penalty uses the 1-based rank.
    if (nu > 0.0 && r + 1 > k_reg) s += nu * static_cast<double>(r + 1 - k_reg);
    out[y] = s;
  }
}

void ApsScoresInto(std::span<const double> probs, double u,
                   std::span<double> out) {
  RapsScoresInto(probs, u, 0.0, 0, out);
}

absl::StatusOr<double> RapsScore(const ProbabilityVector& probs, Label label,
                                 double u, double nu, uint32_t k_reg) {
  if (label >= probs.size()) {
    return absl::InvalidArgumentError(
        fmt::sprintf("label %d out of range for %d classes", label,
                        probs.size()));
  }
  std::vector<double> out(probs.size());
  RapsScoresInto(probs.values(), u, nu, k_reg, out);
  return out[label];
}

absl::StatusOr<double> ApsScore(const ProbabilityVector& probs, Label label,
                                double u) {
  return RapsScore(probs, label, u, 0.0, 0);
}

absl::StatusOr<ScoreMatrix> DiffuseScores(
    const ScoreMatrix& base, std::span<const std::vector<size_t>> adjacency,
    double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError("diffusion must lie in [0, 1]");
  }
  if (adjacency.size() != base.rows()) {
    return absl::InvalidArgumentError("adjacency size does not match scores");
  }
  const size_t num_classes = base.num_classes();
  ScoreMatrix out = base;
  std::vector<double> mean(num_classes);
  for (size_t r = 0; r < base.rows(); ++r) {
    const std::vector<size_t>& nbrs = adjacency[r];
    if (nbrs.empty()) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (size_t n : nbrs) {
      if (n >= base.rows()) {
        return absl::InvalidArgumentError(
            fmt::sprintf("row %d: dangling neighbor %d", r, n));
      }
      for (size_t y = 0; y < num_classes; ++y) mean[y] += base.at(n, y);
    }
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    for (size_t y = 0; y < num_classes; ++y) {
      out.at(r, y) = (1.0 - delta) * base.at(r, y) + delta * (mean[y] * inv);
    }
  }
  return out;
}

double ExampleUniform(uint64_t seed, ExampleId example_id) {
  return internal::ToUnitInterval(internal::KeyedSeed({seed, example_id}));
}

namespace {

void PointScoresInto(const Example& e, const ScoreConfig& config,
                     ScoreKind kind, std::span<double> out) {
  double u = ExampleUniform(config.seed, e.example_id);
  if (kind == ScoreKind::kRaps) {
    RapsScoresInto(e.probs.values(), u, config.nu, config.k_reg, out);
  } else {
    ApsScoresInto(e.probs.values(), u, out);
  }
}

absl::StatusOr<ClientScores> ScoreClient(const ClientDataset& client,
                                         uint32_t num_classes,
                                         const ScoreConfig& config) {
  ClientScores result;
  result.client_id = client.client_id;
  result.calib = ScoreMatrix(client.calib.size(), num_classes);
  result.test = ScoreMatrix(client.test.size(), num_classes);

  if (config.kind != ScoreKind::kDaps) {
    for (size_t i = 0; i < client.calib.size(); ++i) {
      PointScoresInto(client.calib[i], config, config.kind,
                      result.calib.row(i));
    }
    for (size_t i = 0; i < client.test.size(); ++i) {
      PointScoresInto(client.test[i], config, config.kind, result.test.row(i));
    }
    return result;
  }

  // Diffusion runs over every node of the client's graph, whatever its split.
  std::vector<const Example*> nodes;
  for (const auto* part : {&client.calib, &client.test, &client.other}) {
    for (const Example& e : *part) nodes.push_back(&e);
  }
  std::unordered_map<ExampleId, size_t> index;
  for (size_t i = 0; i < nodes.size(); ++i) index[nodes[i]->example_id] = i;

  ScoreMatrix base(nodes.size(), num_classes);
  std::vector<std::vector<size_t>> adjacency(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    PointScoresInto(*nodes[i], config, config.daps_base, base.row(i));
    for (ExampleId n : nodes[i]->neighbors) {
      auto it = index.find(n);
      if (it == index.end()) {
        return absl::InvalidArgumentError(fmt::sprintf(
            "example %d: dangling neighbor %d", nodes[i]->example_id, n));
      }
      adjacency[i].push_back(it->second);
    }
  }
  absl::StatusOr<ScoreMatrix> diffused =
      DiffuseScores(base, adjacency, config.diffusion);
  if (!diffused.ok()) return diffused.status();

  const size_t num_calib = client.calib.size();
  for (size_t i = 0; i < num_calib; ++i) {
    std::ranges::copy(diffused->row(i), result.calib.row(i).begin());
  }
  for (size_t i = 0; i < client.test.size(); ++i) {
    std::ranges::copy(diffused->row(num_calib + i), result.test.row(i).begin());
  }
  return result;
}

}  // namespace

absl::StatusOr<std::vector<ClientScores>> ScoreFederation(
    const Federation& federation, const ScoreConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (config.kind == ScoreKind::kDaps && !federation.HasGraph()) {
    return absl::FailedPreconditionError(
        "DAPS requested but the data carries no neighbor lists");
  }
  std::vector<ClientScores> out;
  out.reserve(federation.clients.size());
  for (const ClientDataset& client : federation.clients) {
    absl::StatusOr<ClientScores> scored =
        ScoreClient(client, federation.num_classes, config);
    if (!scored.ok()) return scored.status();
    out.push_back(*std::move(scored));
  }
  return out;
}

}  // namespace fedfair
