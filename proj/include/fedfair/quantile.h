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
#ifndef FEDFAIR_QUANTILE_H_
#define FEDFAIR_QUANTILE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/quantile_sketch.h"

namespace fedfair {

// ceil((n + clients) * (1 - alpha)), robust to the last-ulp error of the
// product. Split conformal is clients = 1.
uint64_t ConformalRank(uint64_t n, uint64_t clients, double alpha);

// k-th smallest score with k = ceil((n + 1)(1 - alpha)), clamped to the
// maximum when k > n.
absl::StatusOr<double> SplitConformalQuantile(std::span<const double> scores,
                                              double alpha);

struct FcpQuantileResult {
  double lambda = 0.0;
  uint64_t rank = 0;       // ceil((N + K)(1 - alpha))
  uint64_t num_scores = 0; // N
  uint32_t num_clients = 0;
  // rank > N: the threshold is the largest observed score and the upper
  // end of the coverage interval is no longer informative.
  bool vacuous = false;
  // Answered from merged sketches; the coverage interval is approximate.
  bool from_sketch = false;
  double coverage_lower = 0.0;  // 1 - alpha
  double coverage_upper = 0.0;  // 1 - alpha + K / (N + K)
};

// Federated conformal quantile over the pooled calibration scores of K
// clients.
absl::StatusOr<FcpQuantileResult> FcpQuantile(
    std::span<const std::vector<double>> client_scores, double alpha);

// Same rank rule answered from per-client sketches, merged left to right in
// the given order.
absl::StatusOr<FcpQuantileResult> FcpQuantileFromSketches(
    std::span<const QuantileSketch> sketches, double alpha);

}  // namespace fedfair

#endif  // FEDFAIR_QUANTILE_H_
