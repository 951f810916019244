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
#include "fedfair/server_agg.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "fmt/printf.h"

namespace fedfair {

void CompensatedSum::Add(double x) {
  double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

std::vector<double> GammaWeights(std::span<const uint64_t> n) {
  double denom = 0.0;
  for (uint64_t v : n) denom += static_cast<double>(v) + 1.0;
  std::vector<double> gamma;
  gamma.reserve(n.size());
  for (uint64_t v : n) gamma.push_back((static_cast<double>(v) + 1.0) / denom);
  return gamma;
}

namespace {

template <typename Message>
std::vector<double> GammaOf(std::span<const Message> messages) {
  std::vector<uint64_t> n;
  n.reserve(messages.size());
  for (const Message& m : messages) n.push_back(m.n_k);
  return GammaWeights(n);
}

// Checks that a round's messages agree with each other and with the priors.
absl::Status CheckRound(std::span<const ClientCgMessage> messages,
                        const PriorEstimates& priors, size_t j) {
  if (messages.empty()) return absl::InvalidArgumentError("no client messages");
  if (j >= priors.positive_labels.size()) {
    return absl::OutOfRangeError("positive label index out of range");
  }
  const uint32_t g = priors.num_groups;
  for (const ClientCgMessage& m : messages) {
    if (m.estimator != messages.front().estimator) {
      return absl::InvalidArgumentError("mixed estimators across clients");
    }
    if (m.positive_label != priors.positive_labels[j]) {
      return absl::InvalidArgumentError(fmt::sprintf(
          "message for label %d in a round for label %d", m.positive_label,
          priors.positive_labels[j]));
    }
    if (const auto* ce = std::get_if<CommEfficientPayload>(&m.payload)) {
      if (ce->lower.size() != g || ce->upper.size() != g) {
        return absl::InvalidArgumentError("comm-efficient payload size");
      }
    } else {
      const auto& ep = std::get<EnhancedPrivacyPayload>(m.payload);
      if (ep.num_groups != g || ep.pairwise.size() != size_t{g} * g) {
        return absl::InvalidArgumentError("pairwise payload size");
      }
    }
    if (m.noise.has_value() && m.noise->scale.size() != m.num_reals()) {
      return absl::InvalidArgumentError("noise metadata size");
    }
  }
  return absl::OkStatus();
}

bool HasGaussian(const ClientCgMessage& m) {
  return m.noise.has_value() && m.noise->kind == NoiseMeta::Kind::kGaussian;
}

// Noise variance of the (upper a, lower b) difference carried by one message.
double PairVariance(const ClientCgMessage& m, GroupId a, GroupId b,
                    uint32_t num_groups) {
  if (!HasGaussian(m)) return 0.0;
  const std::vector<double>& s = m.noise->scale;
  if (m.is_comm_efficient()) {
    double up = s[num_groups + a];
    double lo = s[b];
    return up * up + lo * lo;
  }
  double v = s[a * num_groups + b];
  return v * v;
}

}  // namespace

absl::StatusOr<PriorEstimates> AggregatePriors(
    std::span<const ClientPriorMessage> messages) {
  if (messages.empty()) return absl::InvalidArgumentError("no prior messages");
  const ClientPriorMessage& first = messages.front();
  for (const ClientPriorMessage& m : messages) {
    if (m.num_groups != first.num_groups ||
        m.positive_labels != first.positive_labels ||
        m.ratios.size() != first.ratios.size()) {
      return absl::InvalidArgumentError("prior messages disagree on shape");
    }
  }
  std::vector<double> gamma = GammaOf(messages);
  PriorEstimates p;
  p.num_groups = first.num_groups;
  p.positive_labels = first.positive_labels;
  const size_t size = first.ratios.size();
  p.lower.resize(size);
  p.upper.resize(size);
  p.point.resize(size);
  p.degenerate.resize(size);
  for (size_t i = 0; i < size; ++i) {
    CompensatedSum lo, hi, mle;
    for (size_t k = 0; k < messages.size(); ++k) {
      lo.Add(gamma[k] * messages[k].ratios[i].lo);
      hi.Add(gamma[k] * messages[k].ratios[i].hi);
      mle.Add(gamma[k] * messages[k].ratios[i].mle);
    }
    p.lower[i] = lo.Total();
    p.upper[i] = hi.Total();
    p.point[i] = mle.Total();
    p.degenerate[i] = p.lower[i] <= 0.0;
  }
  return p;
}

absl::StatusOr<CoverageBounds> CoverageBoundsFromMessages(
    std::span<const ClientCgMessage> messages, const PriorEstimates& priors,
    size_t j) {
  if (absl::Status s = CheckRound(messages, priors, j); !s.ok()) return s;
  for (const ClientCgMessage& m : messages) {
    if (!m.is_comm_efficient()) {
      return absl::InvalidArgumentError(
          "coverage bounds need comm-efficient messages");
    }
  }
  const bool point = UsesPointEstimate(messages.front().estimator);
  const uint32_t num_groups = priors.num_groups;
  std::vector<double> gamma = GammaOf(messages);
  CoverageBounds bounds;
  bounds.lower.assign(num_groups, 0.0);
  bounds.upper.assign(num_groups, 0.0);
  for (GroupId g = 0; g < num_groups; ++g) {
    if (priors.is_degenerate(g, j)) continue;
    CompensatedSum up, lo;
    for (size_t k = 0; k < messages.size(); ++k) {
      const auto& ce = std::get<CommEfficientPayload>(messages[k].payload);
      up.Add(gamma[k] * ce.upper[g]);
      lo.Add(gamma[k] * ce.lower[g]);
    }
    const double upper_prior = point ? priors.pi(g, j) : priors.L(g, j);
    const double lower_prior = point ? priors.pi(g, j) : priors.U(g, j);
    bounds.upper[g] = up.Total() / upper_prior;
    bounds.lower[g] = lo.Total() / lower_prior;
  }
  return bounds;
}

absl::StatusOr<CoverageGapResult> ServerCoverageGap(
    std::span<const ClientCgMessage> messages, const PriorEstimates& priors,
    size_t j) {
  if (absl::Status s = CheckRound(messages, priors, j); !s.ok()) return s;
  const uint32_t num_groups = priors.num_groups;
  const bool point = UsesPointEstimate(messages.front().estimator);
  std::vector<double> gamma = GammaOf(messages);

  CoverageGapResult r;
  r.positive_label = priors.positive_labels[j];
  std::vector<GroupId> active;
  for (GroupId g = 0; g < num_groups; ++g) {
    if (priors.is_degenerate(g, j)) {
      r.excluded_groups.push_back(g);
    } else {
      active.push_back(g);
    }
  }
  const bool all_ce = std::all_of(
      messages.begin(), messages.end(),
      [](const ClientCgMessage& m) { return m.is_comm_efficient(); });

  if (all_ce) {
    r.path = CoverageGapResult::Path::kAllCommEfficient;
    absl::StatusOr<CoverageBounds> bounds =
        CoverageBoundsFromMessages(messages, priors, j);
    if (!bounds.ok()) return bounds.status();
    r.bounds = *std::move(bounds);
    if (active.empty()) return r;
    double raw_max = -std::numeric_limits<double>::infinity();
    double capped_max = -std::numeric_limits<double>::infinity();
    double min_lower = std::numeric_limits<double>::infinity();
    for (GroupId g : active) {
      raw_max = std::max(raw_max, r.bounds.upper[g]);
      r.bounds.upper[g] = std::min(r.bounds.upper[g], 1.0);
      if (r.bounds.upper[g] > capped_max) {
        capped_max = r.bounds.upper[g];
        r.argmax_upper = g;
      }
      if (r.bounds.lower[g] < min_lower) {
        min_lower = r.bounds.lower[g];
        r.argmax_lower = g;
      }
    }
    r.raw_cg = raw_max - min_lower;
    r.cg = std::clamp(capped_max - min_lower, 0.0, 1.0);
  } else {
    r.path = CoverageGapResult::Path::kPairwise;
    r.pairwise.assign(size_t{num_groups} * num_groups, 0.0);
    if (active.empty()) return r;
    double best = -std::numeric_limits<double>::infinity();
    for (GroupId a : active) {
      for (GroupId b : active) {
        CompensatedSum sum;
        for (size_t k = 0; k < messages.size(); ++k) {
          const ClientCgMessage& m = messages[k];
          double v;
          if (const auto* ce = std::get_if<CommEfficientPayload>(&m.payload)) {
            // Comm-efficient clients enter through the same prior-divided
            // difference an enhanced-privacy client computes locally.
            double up_prior = point ? priors.pi(a, j) : priors.L(a, j);
            double lo_prior = point ? priors.pi(b, j) : priors.U(b, j);
            v = ce->upper[a] / up_prior - ce->lower[b] / lo_prior;
          } else {
            v = std::get<EnhancedPrivacyPayload>(m.payload).at(a, b);
          }
          sum.Add(gamma[k] * v);
        }
        double total = sum.Total();
        r.pairwise[a * num_groups + b] = total;
        if (total > best) {
          best = total;
          r.argmax_upper = a;
          r.argmax_lower = b;
        }
      }
    }
    r.raw_cg = best;
    r.cg = std::clamp(best, 0.0, 1.0);
  }
  r.clamped = r.cg != r.raw_cg;

  CompensatedSum variance;
  for (size_t k = 0; k < messages.size(); ++k) {
    variance.Add(gamma[k] * gamma[k] *
                 PairVariance(messages[k], r.argmax_upper, r.argmax_lower,
                              num_groups));
  }
  r.variance = variance.Total();
  return r;
}

absl::StatusOr<size_t> WorstLabel(std::span<const CoverageGapResult> results) {
  if (results.empty()) return absl::InvalidArgumentError("no positive labels");
  size_t worst = 0;
  for (size_t i = 1; i < results.size(); ++i) {
    if (results[i].cg > results[worst].cg) worst = i;
  }
  return worst;
}

absl::StatusOr<double> MultiLabelCoverageGap(
    std::span<const CoverageGapResult> results) {
  absl::StatusOr<size_t> worst = WorstLabel(results);
  if (!worst.ok()) return worst.status();
  return results[*worst].cg;
}

}  // namespace fedfair
