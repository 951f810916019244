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
#include "fedfair/evaluation.h"

#include <algorithm>

#include "absl/status/status.h"
#include "fmt/printf.h"
#include "fedfair/client_stats.h"

namespace fedfair {

absl::StatusOr<double> EmpiricalCoverage(std::span<const double> true_scores,
                                         double lambda) {
  if (true_scores.empty()) return absl::InvalidArgumentError("empty test set");
  size_t covered = std::count_if(true_scores.begin(), true_scores.end(),
                                 [&](double s) { return s <= lambda; });
  return static_cast<double>(covered) / static_cast<double>(true_scores.size());
}

absl::StatusOr<double> Efficiency(const ScoreMatrix& scores, double lambda) {
  if (scores.rows() == 0) return absl::InvalidArgumentError("empty test set");
  size_t members = std::count_if(scores.values().begin(), scores.values().end(),
                                 [&](double s) { return s <= lambda; });
  return static_cast<double>(members) / static_cast<double>(scores.rows());
}

DisparityResult WorstCaseDisparity(std::span<const Example> test,
                                   const ScoreMatrix& scores, double lambda,
                                   const FairnessSpec& spec) {
  DisparityResult result;
  for (Label y : spec.positive_labels) {
    std::vector<uint64_t> support(spec.num_groups, 0);
    std::vector<uint64_t> hits(spec.num_groups, 0);
    for (size_t i = 0; i < test.size(); ++i) {
      GroupId g = test[i].group_id;
      if (g >= spec.num_groups || !PassesFilter(spec.metric, test[i], g, y)) {
        continue;
      }
      ++support[g];
      if (scores.at(i, y) <= lambda) ++hits[g];
    }
    double lo = 1.0;
    double hi = 0.0;
    for (GroupId g = 0; g < spec.num_groups; ++g) {
      if (support[g] == 0) {
        result.warnings.push_back(fmt::sprintf(
            "no test support for (%d, %d); pair skipped", g, y));
        continue;
      }
      double cov =
          static_cast<double>(hits[g]) / static_cast<double>(support[g]);
      result.conditional.push_back({g, y, support[g], cov});
      lo = std::min(lo, cov);
      hi = std::max(hi, cov);
    }
    if (hi >= lo) result.disparity = std::max(result.disparity, hi - lo);
  }
  return result;
}

absl::StatusOr<EvalReport> EvaluateFederation(
    const Federation& federation, std::span<const ClientScores> scores,
    double lambda, const FairnessSpec& spec) {
  if (scores.size() != federation.clients.size()) {
    return absl::InvalidArgumentError("scores do not match clients");
  }
  std::vector<Example> pooled;
  size_t rows = 0;
  for (const ClientDataset& c : federation.clients) rows += c.test.size();
  if (rows == 0) return absl::InvalidArgumentError("empty test set");
  ScoreMatrix pooled_scores(rows, federation.num_classes);
  std::vector<double> true_scores;
  true_scores.reserve(rows);
  pooled.reserve(rows);
  size_t r = 0;
  for (size_t k = 0; k < federation.clients.size(); ++k) {
    const ClientDataset& c = federation.clients[k];
    if (scores[k].test.rows() != c.test.size()) {
      return absl::InvalidArgumentError("score rows do not match test set");
    }
    for (size_t i = 0; i < c.test.size(); ++i, ++r) {
      pooled.push_back(c.test[i]);
      std::ranges::copy(scores[k].test.row(i), pooled_scores.row(r).begin());
      true_scores.push_back(scores[k].test.at(i, c.test[i].true_label));
    }
  }
  EvalReport report;
  report.lambda = lambda;
  report.num_test = rows;
  report.coverage = *EmpiricalCoverage(true_scores, lambda);
  report.efficiency = *Efficiency(pooled_scores, lambda);
  DisparityResult d = WorstCaseDisparity(pooled, pooled_scores, lambda, spec);
  report.disparity = d.disparity;
  report.conditional = std::move(d.conditional);
  report.warnings = std::move(d.warnings);
  return report;
}

}  // namespace fedfair
