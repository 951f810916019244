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
#include "fedfair/optimizer.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "fedfair/privacy.h"

namespace fedfair {

absl::Status OptimizerConfig::Validate(double lambda_0) const {
  if (num_rounds < 1) return absl::InvalidArgumentError("num_rounds < 1");
  if (!(mu >= 0.0 && mu < 1.0)) {
    return absl::InvalidArgumentError("mu must lie in [0, 1)");
  }
  if (eta.has_value() && !(*eta > 0.0)) {
    return absl::InvalidArgumentError("eta must be > 0");
  }
  if (!(lambda_max >= lambda_0)) {
    return absl::InvalidArgumentError("lambda_max below lambda_0");
  }
  if (!(epsilon_lambda > 0.0)) {
    return absl::InvalidArgumentError("epsilon_lambda must be > 0");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    return absl::InvalidArgumentError("beta must lie in (0, 1)");
  }
  return absl::OkStatus();
}

double DefaultEta(double lambda_0, double lambda_max) {
  return std::max(0.05 * (lambda_max - lambda_0), 1e-4);
}

double UpdateLr(double eta, uint32_t p) {
  return std::ldexp(eta, -static_cast<int>(p));
}

TraceEntry DescentStep(OptimizerState& state, const GapSample& sample,
                       bool accepted, double c, double eta, double mu,
                       double epsilon_lambda) {
  TraceEntry e;
  e.lambda = state.lambda;
  e.cg = sample.gap;
  e.variance = sample.variance;
  e.accepted = accepted;

  if (accepted && (!state.feasible || state.lambda < state.lambda_opt)) {
    state.lambda_opt = state.lambda;
    state.feasible = true;
  }
  state.momentum = mu * state.momentum + (sample.gap - c);
  // Positive momentum heads for the best feasible point, negative momentum
  // back toward the coverage anchor; the rate halves until eta_t is no
  // larger than the distance left.
  double target = state.momentum >= 0.0 ? state.lambda_opt : state.lambda_0;
  double distance = std::abs(target - state.lambda);
  uint32_t p = 0;
  if (distance >= epsilon_lambda) {
    double raw = std::ceil(std::log2(eta / distance));
    p = raw > 0.0 ? static_cast<uint32_t>(std::min(raw, 1074.0)) : 0;
  }
  double eta_t = UpdateLr(eta, p);
  state.lambda = std::clamp(state.lambda + eta_t * state.momentum,
                            state.lambda_0, state.lambda_max);

  e.momentum = state.momentum;
  e.p = p;
  e.eta = eta_t;
  return e;
}

absl::StatusOr<OptimizerTrace> FairOptDescent(const GapOracle& oracle,
                                              double lambda_0, double c,
                                              const OptimizerConfig& config) {
  if (absl::Status s = config.Validate(lambda_0); !s.ok()) return s;
  if (!(c > 0.0 && c <= 1.0)) {
    return absl::InvalidArgumentError("closeness must lie in (0, 1]");
  }
  OptimizerTrace trace;
  trace.lambda_0 = lambda_0;
  trace.eta = config.eta.value_or(DefaultEta(lambda_0, config.lambda_max));

  OptimizerState state;
  state.lambda_0 = lambda_0;
  state.lambda_max = config.lambda_max;
  state.lambda = lambda_0;
  state.lambda_opt = config.lambda_max;

  for (uint32_t t = 0; t < config.num_rounds; ++t) {
    absl::StatusOr<GapSample> sample = oracle(state.lambda);
    if (!sample.ok()) return sample.status();
    bool accepted = PacAccept(sample->gap, c, sample->variance, config.beta);
    if (t == 0 && accepted) {
      TraceEntry e;
      e.lambda = lambda_0;
      e.cg = sample->gap;
      e.variance = sample->variance;
      e.accepted = true;
      trace.rounds.push_back(e);
      trace.lambda_opt = lambda_0;
      trace.feasible = true;
      trace.early_exit = true;
      trace.final_sample = *sample;
      trace.final_accepted = true;
      return trace;
    }
    TraceEntry e = DescentStep(state, *sample, accepted, c, trace.eta,
                               config.mu, config.epsilon_lambda);
    e.round = t;
    trace.rounds.push_back(e);
  }

  trace.feasible = state.feasible;
  trace.lambda_opt = state.feasible ? state.lambda_opt : config.lambda_max;
  absl::StatusOr<GapSample> final_sample = oracle(trace.lambda_opt);
  if (!final_sample.ok()) return final_sample.status();
  trace.final_sample = *final_sample;
  trace.final_accepted =
      PacAccept(final_sample->gap, c, final_sample->variance, config.beta);
  return trace;
}

}  // namespace fedfair
