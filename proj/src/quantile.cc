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
#include "fedfair/quantile.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"

namespace fedfair {
namespace {

absl::Status CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return absl::InvalidArgumentError("alpha must lie in (0, 1)");
  }
  return absl::OkStatus();
}

double KthSmallest(std::vector<double> values, uint64_t k) {
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

void FillCoverage(FcpQuantileResult& r, double alpha) {
  r.vacuous = r.rank > r.num_scores;
  r.coverage_lower = 1.0 - alpha;
  r.coverage_upper =
      std::min(1.0, 1.0 - alpha + static_cast<double>(r.num_clients) /
                                      static_cast<double>(r.num_scores +
                                                          r.num_clients));
}

}  // namespace

uint64_t ConformalRank(uint64_t n, uint64_t clients, double alpha) {
  double x = static_cast<double>(n + clients) * (1.0 - alpha);
  // Products like 20 * 0.8 can land one ulp above an integer.
  double k = std::ceil(x - 1e-9 * std::max(1.0, x));
  return k < 1.0 ? 1 : static_cast<uint64_t>(k);
}

absl::StatusOr<double> SplitConformalQuantile(std::span<const double> scores,
                                              double alpha) {
  if (scores.empty()) return absl::InvalidArgumentError("empty score list");
  if (absl::Status s = CheckAlpha(alpha); !s.ok()) return s;
  uint64_t k = std::min<uint64_t>(ConformalRank(scores.size(), 1, alpha),
                                  scores.size());
  return KthSmallest(std::vector<double>(scores.begin(), scores.end()), k);
}

absl::StatusOr<FcpQuantileResult> FcpQuantile(
    std::span<const std::vector<double>> client_scores, double alpha) {
  if (absl::Status s = CheckAlpha(alpha); !s.ok()) return s;
  std::vector<double> pooled;
  for (const std::vector<double>& s : client_scores) {
    pooled.insert(pooled.end(), s.begin(), s.end());
  }
  if (client_scores.empty() || pooled.empty()) {
    return absl::InvalidArgumentError("empty federation");
  }
  FcpQuantileResult r;
  r.num_scores = pooled.size();
  r.num_clients = static_cast<uint32_t>(client_scores.size());
  r.rank = ConformalRank(r.num_scores, r.num_clients, alpha);
  FillCoverage(r, alpha);
  r.lambda = KthSmallest(std::move(pooled), std::min(r.rank, r.num_scores));
  return r;
}

absl::StatusOr<FcpQuantileResult> FcpQuantileFromSketches(
    std::span<const QuantileSketch> sketches, double alpha) {
  if (absl::Status s = CheckAlpha(alpha); !s.ok()) return s;
  if (sketches.empty()) return absl::InvalidArgumentError("empty federation");
  QuantileSketch merged = sketches.front();
  for (size_t i = 1; i < sketches.size(); ++i) {
    absl::StatusOr<QuantileSketch> m = QuantileSketch::Merge(merged, sketches[i]);
    if (!m.ok()) return m.status();
    merged = *std::move(m);
  }
  if (merged.empty()) return absl::InvalidArgumentError("empty federation");

  FcpQuantileResult r;
  r.from_sketch = true;
  r.num_scores = static_cast<uint64_t>(merged.total_weight());
  r.num_clients = static_cast<uint32_t>(sketches.size());
  r.rank = ConformalRank(r.num_scores, r.num_clients, alpha);
  FillCoverage(r, alpha);
  double q = std::min(1.0, static_cast<double>(r.rank) /
                               static_cast<double>(r.num_scores));
  absl::StatusOr<double> lambda = merged.Quantile(q);
  if (!lambda.ok()) return lambda.status();
  r.lambda = *lambda;
  return r;
}

}  // namespace fedfair
