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
#ifndef FEDFAIR_EVALUATION_H_
#define FEDFAIR_EVALUATION_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/domain.h"
#include "fedfair/scores.h"

namespace fedfair {

// Fraction of scores (taken at the true labels) that are <= lambda.
absl::StatusOr<double> EmpiricalCoverage(std::span<const double> true_scores,
                                         double lambda);

// Mean prediction-set size.
absl::StatusOr<double> Efficiency(const ScoreMatrix& scores, double lambda);

struct ConditionalCoverage {
  GroupId group = 0;
  Label positive_label = 0;
  uint64_t support = 0;   // filtered test examples
  double coverage = 0.0;  // share whose set contains the positive label
};

struct DisparityResult {
  double disparity = 0.0;
  // Pairs with test support only.
  std::vector<ConditionalCoverage> conditional;
  std::vector<std::string> warnings;
};

// max over y~ and group pairs of the difference in Pr[y~ in C(x) | filter].
// `scores` rows follow `test`. Groups with no filtered example are skipped.
DisparityResult WorstCaseDisparity(std::span<const Example> test,
                                   const ScoreMatrix& scores, double lambda,
                                   const FairnessSpec& spec);

struct EvalReport {
  double lambda = 0.0;
  uint64_t num_test = 0;
  double coverage = 0.0;
  double efficiency = 0.0;
  double disparity = 0.0;
  std::vector<ConditionalCoverage> conditional;
  std::vector<std::string> warnings;
};

// All metrics on the pooled test splits of every client. `scores` are in the
// same order as federation.clients.
absl::StatusOr<EvalReport> EvaluateFederation(
    const Federation& federation, std::span<const ClientScores> scores,
    double lambda, const FairnessSpec& spec);

}  // namespace fedfair

#endif  // FEDFAIR_EVALUATION_H_
