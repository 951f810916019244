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
// Non-conformity scores over softmax outputs: APS, RAPS and the graph
// diffusion variant DAPS. A prediction set at threshold lambda is
// {y : s(x, y) <= lambda}.
//
#ifndef FEDFAIR_SCORES_H_
#define FEDFAIR_SCORES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fedfair/domain.h"

namespace fedfair {

enum class ScoreKind : uint8_t { kAps, kRaps, kDaps };

std::string_view ScoreKindName(ScoreKind kind);
absl::StatusOr<ScoreKind> ParseScoreKind(std::string_view name);

struct ScoreConfig {
  ScoreKind kind = ScoreKind::kAps;
  double nu = 0.1;         // RAPS penalty weight
  uint32_t k_reg = 1;      // RAPS rank offset
  double diffusion = 0.5;  // DAPS delta
  ScoreKind daps_base = ScoreKind::kAps;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Row-major (examples x classes) score table.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(size_t rows, size_t num_classes)
      : num_classes_(num_classes), values_(rows * num_classes, 0.0) {}

  size_t rows() const {
    return num_classes_ == 0 ? 0 : values_.size() / num_classes_;
  }
  size_t num_classes() const { return num_classes_; }

  double at(size_t row, size_t label) const {
    return values_[row * num_classes_ + label];
  }
  double& at(size_t row, size_t label) {
    return values_[row * num_classes_ + label];
  }
  std::span<const double> row(size_t r) const {
    return std::span<const double>(values_).subspan(r * num_classes_,
                                                    num_classes_);
  }
  std::span<double> row(size_t r) {
    return std::span<double>(values_).subspan(r * num_classes_, num_classes_);
  }
  std::span<const double> values() const { return values_; }

  // Largest entry; -inf when empty.
  double Max() const;

  bool operator==(const ScoreMatrix&) const = default;

 private:
  size_t num_classes_ = 0;
  std::vector<double> values_;
};

// Labels in descending probability order; ties go to the lower label index.
std::vector<Label> DescendingOrder(std::span<const double> probs);

// Sum of the sorted probabilities through the label's rank, minus u times the
// label's own probability.
absl::StatusOr<double> ApsScore(const ProbabilityVector& probs, Label label,
                                double u);

// APS plus nu * max(rank - k_reg, 0), rank being the 1-based descending rank.
absl::StatusOr<double> RapsScore(const ProbabilityVector& probs, Label label,
                                 double u, double nu, uint32_t k_reg);

// Scores for every candidate label at once (one sort). `out` has C entries.
void ApsScoresInto(std::span<const double> probs, double u,
                   std::span<double> out);
void RapsScoresInto(std::span<const double> probs, double u, double nu,
                    uint32_t k_reg, std::span<double> out);

// One-step diffusion: (1 - delta) * s(x, y) + delta * mean over neighbours of
// s(u, y). Isolated rows keep their own score. `adjacency[r]` lists row
// indices of r's neighbours within `base`.
absl::StatusOr<ScoreMatrix> DiffuseScores(
    const ScoreMatrix& base, std::span<const std::vector<size_t>> adjacency,
    double delta);

// The randomisation u for an example, keyed by (seed, example_id) so that it
// does not depend on processing order.
double ExampleUniform(uint64_t seed, ExampleId example_id);

struct ClientScores {
  ClientId client_id = 0;
  ScoreMatrix calib;  // rows follow ClientDataset::calib
  ScoreMatrix test;   // rows follow ClientDataset::test
};

// Scores every client's calibration and test rows. For DAPS the diffusion
// runs over the client's full graph (all splits) before rows are picked out.
absl::StatusOr<std::vector<ClientScores>> ScoreFederation(
    const Federation& federation, const ScoreConfig& config);

}  // namespace fedfair

#endif  // FEDFAIR_SCORES_H_
