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
// Value types exchanged between clients and the server. None of these carry
// per-example fields: the server only ever sees aggregated counts and ratios.
//
#ifndef FEDFAIR_MESSAGES_H_
#define FEDFAIR_MESSAGES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/domain.h"

namespace fedfair {

// How a client turns its alpha counts into coverage estimates.
enum class Estimator : uint8_t {
  kInterval,  // finite-sample exchangeability bounds
  kMle,       // point estimate, assumes IID
  kWilson,    // Wilson score interval on the per-slice coverage trial
};

std::string_view EstimatorName(Estimator estimator);
absl::StatusOr<Estimator> ParseEstimator(std::string_view name);

// Interval and Wilson estimators are both bound-valued and aggregate the same
// way on the server; MLE uses the point prior.
inline bool UsesPointEstimate(Estimator e) { return e == Estimator::kMle; }

// Which message shape a client elects to send each round.
enum class Protocol : uint8_t {
  kCommEfficient,    // per-group (lower, upper) pairs, 2|G| reals
  kEnhancedPrivacy,  // pairwise gap matrix, |G|^2 reals
};

std::string_view ProtocolName(Protocol protocol);
absl::StatusOr<Protocol> ParseProtocol(std::string_view name);

// Per-(g, y~) prior ratios a client reports once per run.
struct PriorRatios {
  double lo = 0.0;   // n_gy / (n_k + 1)
  double hi = 0.0;   // (n_gy + 1) / (n_k + 1)
  double mle = 0.0;  // n_gy / n_k

  bool operator==(const PriorRatios&) const = default;
};

struct ClientPriorMessage {
  uint64_t n_k = 0;
  uint32_t num_groups = 0;
  std::vector<Label> positive_labels;
  // Indexed [j * num_groups + g].
  std::vector<PriorRatios> ratios;

  const PriorRatios& at(GroupId g, size_t j) const {
    return ratios[j * num_groups + g];
  }

  bool operator==(const ClientPriorMessage&) const = default;
};

// Server-side estimates of Pr[F_M = 1] per (g, y~).
struct PriorEstimates {
  uint32_t num_groups = 0;
  std::vector<Label> positive_labels;
  // All indexed [j * num_groups + g].
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> point;
  // Set where the pair has no calibration support anywhere (lower == 0).
  std::vector<bool> degenerate;

  size_t index(GroupId g, size_t j) const { return j * num_groups + g; }
  double L(GroupId g, size_t j) const { return lower[index(g, j)]; }
  double U(GroupId g, size_t j) const { return upper[index(g, j)]; }
  double pi(GroupId g, size_t j) const { return point[index(g, j)]; }
  bool is_degenerate(GroupId g, size_t j) const {
    return degenerate[index(g, j)];
  }

  bool operator==(const PriorEstimates&) const = default;
};

// Differential-privacy bookkeeping carried alongside a noised message.
// Standard deviations (gaussian) or exponential means are expressed in the
// units the server aggregates, i.e. after division by the prior.
struct NoiseMeta {
  enum class Kind : uint8_t { kGaussian = 1, kExponential = 2 };
  Kind kind = Kind::kGaussian;
  // Same layout as the payload they describe: comm-efficient messages store
  // lower entries then upper entries; enhanced-privacy messages store the
  // pairwise matrix row-major.
  std::vector<double> scale;

  bool operator==(const NoiseMeta&) const = default;
};

struct CommEfficientPayload {
  std::vector<double> lower;
  std::vector<double> upper;

  bool operator==(const CommEfficientPayload&) const = default;
};

struct EnhancedPrivacyPayload {
  uint32_t num_groups = 0;
  // pw[a * num_groups + b] = u'[a] - l'[b].
  std::vector<double> pairwise;

  double at(GroupId a, GroupId b) const { return pairwise[a * num_groups + b]; }

  bool operator==(const EnhancedPrivacyPayload&) const = default;
};

struct ClientCgMessage {
  uint64_t n_k = 0;
  Label positive_label = 0;
  Estimator estimator = Estimator::kInterval;
  std::variant<CommEfficientPayload, EnhancedPrivacyPayload> payload;
  std::optional<NoiseMeta> noise;

  bool is_comm_efficient() const {
    return std::holds_alternative<CommEfficientPayload>(payload);
  }
  size_t num_reals() const;

  bool operator==(const ClientCgMessage&) const = default;
};

}  // namespace fedfair

#endif  // FEDFAIR_MESSAGES_H_
