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
#include "fedfair/privacy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "absl/status/status.h"
#include "fmt/format.h"

namespace fedfair {

std::string_view MechanismName(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kNone:
      return "none";
    case Mechanism::kGaussian:
      return "gaussian";
    case Mechanism::kExponential:
      return "exponential";
  }
  return "unknown";
}

absl::StatusOr<Mechanism> ParseMechanism(std::string_view name) {
  if (name == "none") return Mechanism::kNone;
  if (name == "gaussian") return Mechanism::kGaussian;
  if (name == "exponential") return Mechanism::kExponential;
  return absl::InvalidArgumentError(
      fmt::format("unknown DP mechanism '{}'", name));
}

absl::Status DpConfig::Validate() const {
  if (mechanism == Mechanism::kNone) return absl::OkStatus();
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be > 0");
  if (mechanism == Mechanism::kGaussian && !(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    return absl::InvalidArgumentError("beta must lie in (0, 1)");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> Sensitivity(SensitivityEntry entry, uint64_t n_k,
                                   double L, double U) {
  if (n_k == 0) return absl::InvalidArgumentError("n_k must be >= 1");
  if (!(L > 0.0) || !(U > 0.0)) return absl::InvalidArgumentError("zero prior");
  const double n = static_cast<double>(n_k);
  switch (entry) {
    case SensitivityEntry::kPairwise:
      return (1.0 / n) * (1.0 / L + 1.0 / U);
    case SensitivityEntry::kUpper:
      return 1.0 / (n * L);
    case SensitivityEntry::kLower:
      return 1.0 / (n * U);
  }
  return absl::InternalError("unknown sensitivity entry");
}

absl::StatusOr<double> GaussianSigma(double delta_h, double epsilon,
                                     double delta) {
  if (!(delta_h >= 0.0)) return absl::InvalidArgumentError("negative delta_h");
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be > 0");
  if (!(delta > 0.0 && delta < 1.25)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1.25)");
  }
  return delta_h * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

double NormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

bool PacAccept(double cg, double c, double variance, double beta) {
  if (!(variance > 0.0)) return cg <= c + kGapTolerance;
  return NormalCdf((c - cg) / std::sqrt(variance)) > beta;
}

double AggregatedVariance(std::span<const double> gamma,
                          std::span<const double> sigma) {
  double total = 0.0;
  const size_t n = std::min(gamma.size(), sigma.size());
  for (size_t k = 0; k < n; ++k) {
    total += gamma[k] * gamma[k] * sigma[k] * sigma[k];
  }
  return total;
}

namespace {

// Server-unit noise scale for an entry of sensitivity `delta_h`.
absl::StatusOr<double> NoiseScale(const DpConfig& dp, double delta_h) {
  if (dp.mechanism == Mechanism::kGaussian) {
    return GaussianSigma(delta_h, dp.epsilon, dp.delta);
  }
  // Exponential with rate epsilon / (2 delta_h); report its mean.
  return 2.0 * delta_h / dp.epsilon;
}

class NoiseSource {
 public:
  NoiseSource(Mechanism mechanism, uint64_t key)
      : mechanism_(mechanism), rng_(key) {}

  // A draw in server units with the given scale.
  double Draw(double scale) {
    if (scale == 0.0) return 0.0;
    if (mechanism_ == Mechanism::kGaussian) {
      return std::normal_distribution<double>(0.0, scale)(rng_);
    }
    return std::exponential_distribution<double>(1.0 / scale)(rng_);
  }

 private:
  Mechanism mechanism_;
  std::mt19937_64 rng_;
};

}  // namespace

absl::StatusOr<ClientCgMessage> AddNoise(const ClientCgMessage& message,
                                         const PriorEstimates& priors,
                                         size_t j, const DpConfig& dp,
                                         uint64_t stream_key) {
  if (absl::Status s = dp.Validate(); !s.ok()) return s;
  if (dp.mechanism == Mechanism::kNone) return message;
  if (j >= priors.positive_labels.size()) {
    return absl::OutOfRangeError("positive label index out of range");
  }
  const uint32_t num_groups = priors.num_groups;
  const bool point = UsesPointEstimate(message.estimator);
  auto upper_prior = [&](GroupId g) {
    return point ? priors.pi(g, j) : priors.L(g, j);
  };
  auto lower_prior = [&](GroupId g) {
    return point ? priors.pi(g, j) : priors.U(g, j);
  };
  const bool one_sided = dp.mechanism == Mechanism::kExponential;

  ClientCgMessage out = message;
  NoiseMeta meta;
  meta.kind = one_sided ? NoiseMeta::Kind::kExponential
                        : NoiseMeta::Kind::kGaussian;
  NoiseSource source(dp.mechanism, stream_key);

  if (auto* ce = std::get_if<CommEfficientPayload>(&out.payload)) {
    if (ce->lower.size() != num_groups || ce->upper.size() != num_groups) {
      return absl::InvalidArgumentError("payload does not match priors");
    }
    meta.scale.assign(2 * size_t{num_groups}, 0.0);
    for (GroupId g = 0; g < num_groups; ++g) {
      if (priors.is_degenerate(g, j)) continue;
      absl::StatusOr<double> lo_dh = Sensitivity(
          SensitivityEntry::kLower, message.n_k, upper_prior(g), lower_prior(g));
      absl::StatusOr<double> up_dh = Sensitivity(
          SensitivityEntry::kUpper, message.n_k, upper_prior(g), lower_prior(g));
      if (!lo_dh.ok()) return lo_dh.status();
      if (!up_dh.ok()) return up_dh.status();
      absl::StatusOr<double> lo_scale = NoiseScale(dp, *lo_dh);
      absl::StatusOr<double> up_scale = NoiseScale(dp, *up_dh);
      if (!lo_scale.ok()) return lo_scale.status();
      if (!up_scale.ok()) return up_scale.status();
      meta.scale[g] = *lo_scale;
      meta.scale[num_groups + g] = *up_scale;
      // Raw entries are divided by their prior on the server, so the raw
      // perturbation is the server-unit draw times that prior.
      double lo_noise = source.Draw(*lo_scale) * lower_prior(g);
      double up_noise = source.Draw(*up_scale) * upper_prior(g);
      ce->lower[g] += one_sided ? -lo_noise : lo_noise;
      ce->upper[g] += up_noise;
    }
  } else {
    auto& ep = std::get<EnhancedPrivacyPayload>(out.payload);
    if (ep.num_groups != num_groups) {
      return absl::InvalidArgumentError("payload does not match priors");
    }
    meta.scale.assign(ep.pairwise.size(), 0.0);
    for (GroupId a = 0; a < num_groups; ++a) {
      for (GroupId b = 0; b < num_groups; ++b) {
        if (priors.is_degenerate(a, j) || priors.is_degenerate(b, j)) continue;
        absl::StatusOr<double> dh = Sensitivity(
            SensitivityEntry::kPairwise, message.n_k, upper_prior(a),
            lower_prior(b));
        if (!dh.ok()) return dh.status();
        absl::StatusOr<double> scale = NoiseScale(dp, *dh);
        if (!scale.ok()) return scale.status();
        meta.scale[a * num_groups + b] = *scale;
        ep.pairwise[a * num_groups + b] += source.Draw(*scale);
      }
    }
  }
  out.noise = std::move(meta);
  return out;
}

}  // namespace fedfair
