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
// Output perturbation for coverage-gap messages. Noise is calibrated to the
// sensitivity of each entry after the server divides it by its prior, and
// NoiseMeta reports it in those units.
//
#ifndef FEDFAIR_PRIVACY_H_
#define FEDFAIR_PRIVACY_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fedfair/messages.h"

namespace fedfair {

enum class Mechanism : uint8_t { kNone, kGaussian, kExponential };

std::string_view MechanismName(Mechanism mechanism);
absl::StatusOr<Mechanism> ParseMechanism(std::string_view name);

struct DpConfig {
  Mechanism mechanism = Mechanism::kNone;
  double epsilon = 1.0;
  double delta = 1e-5;  // gaussian only
  double beta = 0.5;    // PAC acceptance level
  uint64_t seed = 0;

  absl::Status Validate() const;
};

enum class SensitivityEntry : uint8_t {
  kPairwise,  // enhanced-privacy matrix entry
  kUpper,     // comm-efficient upper entry
  kLower,     // comm-efficient lower entry
};

// Change in a prior-divided entry when one calibration point changes.
absl::StatusOr<double> Sensitivity(SensitivityEntry entry, uint64_t n_k,
                                   double L, double U);

// Delta_h * sqrt(2 ln(1.25 / delta)) / epsilon.
absl::StatusOr<double> GaussianSigma(double delta_h, double epsilon,
                                     double delta);

double NormalCdf(double x);

// Gaps are short sums of count ratios, so a gap that equals c on paper can
// land an ulp or two above it.
inline constexpr double kGapTolerance = 1e-12;

// Accept iff Phi((c - cg) / sqrt(variance)) > beta; with zero variance,
// iff cg <= c + kGapTolerance.
bool PacAccept(double cg, double c, double variance, double beta);

// sum_k gamma_k^2 sigma_k^2.
double AggregatedVariance(std::span<const double> gamma,
                          std::span<const double> sigma);

// Perturbs a client message. Gaussian noise is symmetric. Exponential noise
// is one-sided in the direction that can only widen the gap: added to upper
// and pairwise entries, subtracted from lower entries. Entries of degenerate
// groups are left at zero. `stream_key` selects the random stream; callers
// derive it from (seed, client, round, label).
absl::StatusOr<ClientCgMessage> AddNoise(const ClientCgMessage& message,
                                         const PriorEstimates& priors,
                                         size_t j, const DpConfig& dp,
                                         uint64_t stream_key);

}  // namespace fedfair

#endif  // FEDFAIR_PRIVACY_H_
