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
#include "fedfair/client_stats.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "fmt/printf.h"

namespace fedfair {

std::string_view EstimatorName(Estimator estimator) {
  switch (estimator) {
    case Estimator::kInterval:
      return "interval";
    case Estimator::kMle:
      return "mle";
    case Estimator::kWilson:
      return "wilson";
  }
  return "unknown";
}

absl::StatusOr<Estimator> ParseEstimator(std::string_view name) {
  if (name == "interval") return Estimator::kInterval;
  if (name == "mle") return Estimator::kMle;
  if (name == "wilson") return Estimator::kWilson;
  return absl::InvalidArgumentError(
      fmt::format("unknown estimator '{}'", name));
}

std::string_view ProtocolName(Protocol protocol) {
  switch (protocol) {
    case Protocol::kCommEfficient:
      return "comm_efficient";
    case Protocol::kEnhancedPrivacy:
      return "enhanced_privacy";
  }
  return "unknown";
}

absl::StatusOr<Protocol> ParseProtocol(std::string_view name) {
  if (name == "comm_efficient" || name == "ce") return Protocol::kCommEfficient;
  if (name == "enhanced_privacy" || name == "ep") {
    return Protocol::kEnhancedPrivacy;
  }
  return absl::InvalidArgumentError(
      fmt::format("unknown protocol '{}'", name));
}

size_t ClientCgMessage::num_reals() const {
  if (const auto* ce = std::get_if<CommEfficientPayload>(&payload)) {
    return ce->lower.size() + ce->upper.size();
  }
  return std::get<EnhancedPrivacyPayload>(payload).pairwise.size();
}

bool PassesFilter(FairnessMetric metric, const Example& example, GroupId g,
                  Label tilde_y) {
  if (example.group_id != g) return false;
  switch (metric) {
    case FairnessMetric::kDemographicParity:
      return true;
    case FairnessMetric::kEqualOpportunity:
      return example.true_label == tilde_y;
    case FairnessMetric::kPredictiveEquality:
      return example.true_label != tilde_y;
  }
  return false;
}

uint64_t AlphaCount(std::span<const Example> calib, const ScoreMatrix& scores,
                    FairnessMetric metric, double lambda, GroupId g,
                    Label tilde_y) {
  uint64_t count = 0;
  for (size_t i = 0; i < calib.size(); ++i) {
    if (PassesFilter(metric, calib[i], g, tilde_y) &&
        scores.at(i, tilde_y) <= lambda) {
      ++count;
    }
  }
  return count;
}

absl::StatusOr<std::pair<double, double>> WilsonBounds(uint64_t successes,
                                                       uint64_t trials,
                                                       double z) {
  if (trials == 0) return absl::InvalidArgumentError("zero trials");
  if (successes > trials) {
    return absl::InvalidArgumentError("more successes than trials");
  }
  if (!(z >= 0.0)) return absl::InvalidArgumentError("negative z");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  if (z == 0.0) return std::make_pair(p, p);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  double lo = successes == 0 ? 0.0 : std::max(0.0, center - half);
  double hi = successes == trials ? 1.0 : std::min(1.0, center + half);
  return std::make_pair(lo, hi);
}

absl::Status EstimatorOptions::Validate() const {
  if (estimator == Estimator::kWilson && !(wilson_z >= 0.0)) {
    return absl::InvalidArgumentError("wilson_z must be >= 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<LocalCalibration> LocalCalibration::Create(
    const ClientDataset& dataset, const ScoreMatrix& calib_scores,
    const FairnessSpec& spec) {
  if (dataset.calib.empty()) {
    return absl::InvalidArgumentError(fmt::sprintf(
        "empty calibration set on client %d", dataset.client_id));
  }
  if (calib_scores.rows() != dataset.calib.size()) {
    return absl::InvalidArgumentError("score rows do not match calibration set");
  }
  for (Label y : spec.positive_labels) {
    if (y >= calib_scores.num_classes()) {
      return absl::InvalidArgumentError(
          fmt::sprintf("positive label %d out of range", y));
    }
  }
  LocalCalibration local;
  local.client_id_ = dataset.client_id;
  local.n_k_ = dataset.calib.size();
  local.num_groups_ = spec.num_groups;
  local.positive_labels_ = spec.positive_labels;
  local.sorted_.resize(spec.positive_labels.size() * spec.num_groups);
  for (size_t i = 0; i < dataset.calib.size(); ++i) {
    const Example& e = dataset.calib[i];
    if (e.group_id >= spec.num_groups) {
      return absl::InvalidArgumentError(
          fmt::sprintf("example %d: group out of range", e.example_id));
    }
    for (size_t j = 0; j < spec.positive_labels.size(); ++j) {
      Label y = spec.positive_labels[j];
      if (PassesFilter(spec.metric, e, e.group_id, y)) {
        local.sorted_[j * spec.num_groups + e.group_id].push_back(
            calib_scores.at(i, y));
      }
    }
  }
  for (std::vector<double>& v : local.sorted_) std::sort(v.begin(), v.end());
  return local;
}

uint64_t LocalCalibration::AlphaCount(GroupId g, size_t j,
                                      double lambda) const {
  const std::vector<double>& v = sorted_[j * num_groups_ + g];
  return static_cast<uint64_t>(std::upper_bound(v.begin(), v.end(), lambda) -
                               v.begin());
}

ClientPriorMessage LocalCalibration::PriorMessage() const {
  ClientPriorMessage m;
  m.n_k = n_k_;
  m.num_groups = num_groups_;
  m.positive_labels = positive_labels_;
  m.ratios.resize(sorted_.size());
  const double n = static_cast<double>(n_k_);
  for (size_t i = 0; i < sorted_.size(); ++i) {
    const double n_gy = static_cast<double>(sorted_[i].size());
    m.ratios[i] = {n_gy / (n + 1.0), (n_gy + 1.0) / (n + 1.0), n_gy / n};
  }
  return m;
}

absl::StatusOr<LocalCalibration::Entry> LocalCalibration::GroupEntry(
    GroupId g, size_t j, double lambda, const EstimatorOptions& options) const {
  const uint64_t n_gy = this->n_gy(g, j);
  const double alpha = static_cast<double>(AlphaCount(g, j, lambda));
  const double n = static_cast<double>(n_k_);
  const double m = static_cast<double>(n_gy);
  Entry e;
  switch (options.estimator) {
    case Estimator::kInterval:
      e.upper = (alpha + 1.0) / (n + 1.0);
      e.lower = options.tightened_lower
                    ? alpha / (n + 1.0)
                    : alpha * m / ((m + 1.0) * (n + 1.0));
      break;
    case Estimator::kMle:
      e.lower = e.upper = alpha / n;
      break;
    case Estimator::kWilson: {
      if (n_gy == 0) {
        e.lower = 0.0;
        e.upper = 1.0 / (n + 1.0);
        break;
      }
      absl::StatusOr<std::pair<double, double>> w =
          WilsonBounds(static_cast<uint64_t>(alpha), n_gy, options.wilson_z);
      if (!w.ok()) return w.status();
      e.lower = w->first * m / (n + 1.0);
      e.upper = w->second * (m + 1.0) / (n + 1.0);
      break;
    }
  }
  return e;
}

absl::StatusOr<ClientCgMessage> LocalCalibration::CommEfficientMessage(
    double lambda, size_t j, const EstimatorOptions& options) const {
  if (j >= positive_labels_.size()) {
    return absl::OutOfRangeError("positive label index out of range");
  }
  CommEfficientPayload payload;
  payload.lower.resize(num_groups_);
  payload.upper.resize(num_groups_);
  for (GroupId g = 0; g < num_groups_; ++g) {
    absl::StatusOr<Entry> e = GroupEntry(g, j, lambda, options);
    if (!e.ok()) return e.status();
    payload.lower[g] = e->lower;
    payload.upper[g] = e->upper;
  }
  ClientCgMessage m;
  m.n_k = n_k_;
  m.positive_label = positive_labels_[j];
  m.estimator = options.estimator;
  m.payload = std::move(payload);
  return m;
}

absl::StatusOr<ClientCgMessage> LocalCalibration::EnhancedPrivacyMessage(
    double lambda, size_t j, const PriorEstimates& priors,
    const EstimatorOptions& options) const {
  if (j >= positive_labels_.size()) {
    return absl::OutOfRangeError("positive label index out of range");
  }
  if (priors.num_groups != num_groups_ ||
      priors.positive_labels != positive_labels_) {
    return absl::InvalidArgumentError("priors do not match the fairness spec");
  }
  const bool point = UsesPointEstimate(options.estimator);
  std::vector<double> up(num_groups_, 0.0);
  std::vector<double> lo(num_groups_, 0.0);
  std::vector<bool> skip(num_groups_, false);
  for (GroupId g = 0; g < num_groups_; ++g) {
    if (priors.is_degenerate(g, j)) {
      skip[g] = true;
      continue;
    }
    const double for_upper = point ? priors.pi(g, j) : priors.L(g, j);
    const double for_lower = point ? priors.pi(g, j) : priors.U(g, j);
    if (!(for_upper > 0.0) || !(for_lower > 0.0)) {
      return absl::FailedPreconditionError(
          fmt::sprintf("degenerate prior for group %d, label %d", g,
                          positive_labels_[j]));
    }
    absl::StatusOr<Entry> e = GroupEntry(g, j, lambda, options);
    if (!e.ok()) return e.status();
    up[g] = e->upper / for_upper;
    lo[g] = e->lower / for_lower;
  }
  EnhancedPrivacyPayload payload;
  payload.num_groups = num_groups_;
  payload.pairwise.assign(size_t{num_groups_} * num_groups_, 0.0);
  for (GroupId a = 0; a < num_groups_; ++a) {
    for (GroupId b = 0; b < num_groups_; ++b) {
      if (skip[a] || skip[b]) continue;
      payload.pairwise[a * num_groups_ + b] = up[a] - lo[b];
    }
  }
  ClientCgMessage m;
  m.n_k = n_k_;
  m.positive_label = positive_labels_[j];
  m.estimator = options.estimator;
  m.payload = std::move(payload);
  return m;
}

}  // namespace fedfair
