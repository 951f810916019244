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
// Server-side reductions. Every function takes messages in ascending client
// order and sums them with compensated accumulation in that order, so results
// do not depend on how the messages were collected.
//
#ifndef FEDFAIR_SERVER_AGG_H_
#define FEDFAIR_SERVER_AGG_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/domain.h"
#include "fedfair/messages.h"

namespace fedfair {

// Neumaier summation.
class CompensatedSum {
 public:
  void Add(double x);
  double Total() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

// gamma_k = (n_k + 1) / (N + K).
std::vector<double> GammaWeights(std::span<const uint64_t> n);

absl::StatusOr<PriorEstimates> AggregatePriors(
    std::span<const ClientPriorMessage> messages);

struct CoverageBounds {
  // Indexed by group, before any clamping. Degenerate groups hold 0.
  std::vector<double> lower;
  std::vector<double> upper;
};

// Group coverage bounds from comm-efficient messages: upper entries divided
// by L, lower entries by U (both by pi for the point estimator).
absl::StatusOr<CoverageBounds> CoverageBoundsFromMessages(
    std::span<const ClientCgMessage> messages, const PriorEstimates& priors,
    size_t j);

struct CoverageGapResult {
  enum class Path : uint8_t { kAllCommEfficient, kPairwise };

  Path path = Path::kAllCommEfficient;
  Label positive_label = 0;
  double cg = 0.0;      // in [0, 1]
  double raw_cg = 0.0;  // before clamping
  bool clamped = false;
  // All-comm-efficient path: per-group bounds, upper already capped at 1.
  CoverageBounds bounds;
  // Pairwise path: aggregated |G| x |G| matrix, row-major.
  std::vector<double> pairwise;
  // The pair realising the gap: upper side a, lower side b.
  GroupId argmax_upper = 0;
  GroupId argmax_lower = 0;
  // Sum of gamma^2 sigma^2 at the arg-max pair over gaussian-noised
  // messages; 0 when no gaussian noise was applied.
  double variance = 0.0;
  std::vector<GroupId> excluded_groups;
};

// Combines one round of messages for positive label index j. Uses the
// per-group bound path when every message is comm-efficient and the pairwise
// path otherwise.
absl::StatusOr<CoverageGapResult> ServerCoverageGap(
    std::span<const ClientCgMessage> messages, const PriorEstimates& priors,
    size_t j);

// Index of the worst positive label (largest cg); ties keep the first.
absl::StatusOr<size_t> WorstLabel(std::span<const CoverageGapResult> results);

// max over positive labels of cg.
absl::StatusOr<double> MultiLabelCoverageGap(
    std::span<const CoverageGapResult> results);

}  // namespace fedfair

#endif  // FEDFAIR_SERVER_AGG_H_
