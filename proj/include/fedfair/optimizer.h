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
// Momentum descent on the score threshold. The gap is treated as a signal,
// not a gradient: positive momentum pulls lambda up toward the best feasible
// threshold seen so far, negative momentum pulls it back toward lambda_0.
//
#ifndef FEDFAIR_OPTIMIZER_H_
#define FEDFAIR_OPTIMIZER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace fedfair {

// One evaluation of the coverage gap. `variance` is nonzero only when the
// gap carries gaussian noise; feasibility then goes through PacAccept.
struct GapSample {
  double gap = 0.0;
  double variance = 0.0;
};

using GapOracle = std::function<absl::StatusOr<GapSample>(double lambda)>;

struct OptimizerConfig {
  uint32_t num_rounds = 50;
  // Unset: DefaultEta(lambda_0, lambda_max).
  std::optional<double> eta;
  double mu = 0.9;
  double lambda_max = 1.0;
  double epsilon_lambda = 1e-12;
  // Acceptance level used when a sample has nonzero variance.
  double beta = 0.5;

  absl::Status Validate(double lambda_0) const;
};

// max(0.05 * (lambda_max - lambda_0), 1e-4).
double DefaultEta(double lambda_0, double lambda_max);

// eta * 2^-p.
double UpdateLr(double eta, uint32_t p);

struct OptimizerState {
  double lambda_0 = 0.0;
  double lambda_max = 1.0;
  double lambda = 0.0;  // lambda_t
  double lambda_opt = 1.0;
  double momentum = 0.0;  // b_t
  bool feasible = false;
};

struct TraceEntry {
  uint32_t round = 0;
  double lambda = 0.0;
  double cg = 0.0;
  double variance = 0.0;
  bool accepted = false;
  double momentum = 0.0;  // b_{t+1}
  uint32_t p = 0;
  double eta = 0.0;  // eta_t
};

// Applies one update given the gap observed at state.lambda. Records the
// round in the returned entry.
TraceEntry DescentStep(OptimizerState& state, const GapSample& sample,
                       bool accepted, double c, double eta, double mu,
                       double epsilon_lambda);

struct OptimizerTrace {
  std::vector<TraceEntry> rounds;
  double lambda_0 = 0.0;
  double lambda_opt = 0.0;
  bool feasible = false;
  // Gap re-evaluated at lambda_opt after the last round.
  GapSample final_sample;
  bool final_accepted = false;
  // True when round 0 already met the criterion.
  bool early_exit = false;
  double eta = 0.0;
};

// Smallest accepted threshold observed, never below lambda_0. When no round
// is accepted the result is lambda_max with feasible = false.
absl::StatusOr<OptimizerTrace> FairOptDescent(const GapOracle& oracle,
                                              double lambda_0, double c,
                                              const OptimizerConfig& config);

}  // namespace fedfair

#endif  // FEDFAIR_OPTIMIZER_H_
