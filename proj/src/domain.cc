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
#include "fedfair/domain.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "fmt/printf.h"

namespace fedfair {

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kCalib:
      return "calib";
    case Split::kTest:
      return "test";
  }
  return "unknown";
}

absl::StatusOr<Split> ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "calib") return Split::kCalib;
  if (name == "test") return Split::kTest;
  return absl::InvalidArgumentError(fmt::format("unknown split '{}'", name));
}

absl::StatusOr<ProbabilityVector> ProbabilityVector::Create(
    std::vector<double> probs) {
  if (probs.empty()) {
    return absl::InvalidArgumentError("empty probability vector");
  }
  double sum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    double p = probs[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      return absl::InvalidArgumentError(
          fmt::sprintf("probability %d out of [0,1]: %.17g", i, p));
    }
    sum += p;
  }
  double drift = std::abs(sum - 1.0);
  if (drift > kProbabilityTolerance) {
    return absl::InvalidArgumentError(
        fmt::sprintf("probabilities sum to %.17g", sum));
  }
  if (drift > 1e-12) {
    for (double& p : probs) p /= sum;
  }
  return ProbabilityVector(std::move(probs));
}

std::string_view MetricName(FairnessMetric metric) {
  switch (metric) {
    case FairnessMetric::kDemographicParity:
      return "demographic_parity";
    case FairnessMetric::kEqualOpportunity:
      return "equal_opportunity";
    case FairnessMetric::kPredictiveEquality:
      return "predictive_equality";
  }
  return "unknown";
}

absl::StatusOr<FairnessMetric> ParseMetric(std::string_view name) {
  if (name == "demographic_parity" || name == "dp") {
    return FairnessMetric::kDemographicParity;
  }
  if (name == "equal_opportunity" || name == "eo") {
    return FairnessMetric::kEqualOpportunity;
  }
  if (name == "predictive_equality" || name == "pe") {
    return FairnessMetric::kPredictiveEquality;
  }
  return absl::InvalidArgumentError(
      fmt::format("unknown fairness metric '{}'", name));
}

absl::Status FairnessSpec::Validate(uint32_t num_classes) const {
  if (num_groups < 2) {
    return absl::InvalidArgumentError("need at least 2 groups");
  }
  if (positive_labels.empty()) {
    return absl::InvalidArgumentError("positive label set is empty");
  }
  std::set<Label> seen;
  for (Label y : positive_labels) {
    if (y >= num_classes) {
      return absl::InvalidArgumentError(
          fmt::sprintf("positive label %d out of range", y));
    }
    if (!seen.insert(y).second) {
      return absl::InvalidArgumentError(
          fmt::sprintf("positive label %d listed twice", y));
    }
  }
  if (!(closeness > 0.0 && closeness <= 1.0)) {
    return absl::InvalidArgumentError("closeness must lie in (0, 1]");
  }
  return absl::OkStatus();
}

int FairnessSpec::PositiveIndex(Label label) const {
  auto it = std::find(positive_labels.begin(), positive_labels.end(), label);
  if (it == positive_labels.end()) return -1;
  return static_cast<int>(it - positive_labels.begin());
}

bool Federation::HasGraph() const {
  for (const ClientDataset& c : clients) {
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) {
        if (!e.neighbors.empty()) return true;
      }
    }
  }
  return false;
}

const ClientDataset* Federation::FindClient(ClientId id) const {
  for (const ClientDataset& c : clients) {
    if (c.client_id == id) return &c;
  }
  return nullptr;
}

namespace {

bool Passes(FairnessMetric metric, const Example& e, GroupId g, Label y) {
  if (e.group_id != g) return false;
  switch (metric) {
    case FairnessMetric::kDemographicParity:
      return true;
    case FairnessMetric::kEqualOpportunity:
      return e.true_label == y;
    case FairnessMetric::kPredictiveEquality:
      return e.true_label != y;
  }
  return false;
}

}  // namespace

absl::StatusOr<ValidationReport> ValidateFederation(const Federation& federation,
                                                    const FairnessSpec& spec) {
  if (federation.clients.empty()) {
    return absl::InvalidArgumentError("federation has no clients");
  }
  if (absl::Status s = spec.Validate(federation.num_classes); !s.ok()) return s;
  if (spec.num_groups != federation.num_groups) {
    return absl::InvalidArgumentError(fmt::sprintf(
        "fairness spec has %d groups, data has %d", spec.num_groups,
        federation.num_groups));
  }
  const uint32_t num_groups = federation.num_groups;
  const size_t num_pos = spec.positive_labels.size();

  ValidationReport report;
  std::unordered_set<ExampleId> all_ids;
  std::vector<uint64_t> total(num_groups * num_pos, 0);
  std::set<ClientId> client_ids;

  for (const ClientDataset& c : federation.clients) {
    if (!client_ids.insert(c.client_id).second) {
      return absl::InvalidArgumentError(
          fmt::sprintf("duplicate client id %d", c.client_id));
    }
    if (c.calib.empty()) {
      return absl::InvalidArgumentError(fmt::sprintf(
          "empty calibration set on client %d", c.client_id));
    }
    std::unordered_map<ExampleId, int> local;
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) {
        if (e.client_id != c.client_id) {
          return absl::InvalidArgumentError(fmt::sprintf(
              "example %d carries client %d inside client %d", e.example_id,
              e.client_id, c.client_id));
        }
        if (e.true_label >= federation.num_classes) {
          return absl::InvalidArgumentError(fmt::sprintf(
              "example %d: label %d out of range", e.example_id, e.true_label));
        }
        if (e.group_id >= num_groups) {
          return absl::InvalidArgumentError(fmt::sprintf(
              "example %d: group %d out of range", e.example_id, e.group_id));
        }
        if (e.probs.size() != federation.num_classes) {
          return absl::InvalidArgumentError(fmt::sprintf(
              "example %d: %d probabilities for %d classes", e.example_id,
              e.probs.size(), federation.num_classes));
        }
        if (!all_ids.insert(e.example_id).second) {
          return absl::InvalidArgumentError(
              fmt::sprintf("duplicate example id %d", e.example_id));
        }
        local.emplace(e.example_id, 0);
      }
    }
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) {
        for (ExampleId n : e.neighbors) {
          if (!local.contains(n)) {
            return absl::InvalidArgumentError(fmt::sprintf(
                "example %d: neighbor %d is not on client %d", e.example_id, n,
                c.client_id));
          }
        }
      }
    }

    ClientSummary summary;
    summary.client_id = c.client_id;
    summary.n_calib = c.calib.size();
    summary.n_test = c.test.size();
    summary.group_label_counts.assign(num_groups * num_pos, 0);
    for (const Example& e : c.calib) {
      for (size_t j = 0; j < num_pos; ++j) {
        if (Passes(spec.metric, e, e.group_id, spec.positive_labels[j])) {
          ++summary.group_label_counts[j * num_groups + e.group_id];
        }
      }
    }
    for (size_t i = 0; i < total.size(); ++i) {
      total[i] += summary.group_label_counts[i];
    }
    report.clients.push_back(std::move(summary));
  }

  for (size_t j = 0; j < num_pos; ++j) {
    for (GroupId g = 0; g < num_groups; ++g) {
      if (total[j * num_groups + g] == 0) {
        Label y = spec.positive_labels[j];
        report.unsupported_pairs.emplace_back(g, y);
        report.warnings.push_back(fmt::sprintf(
            "zero calibration support for (%d, %d)", g, y));
      }
    }
  }
  std::sort(report.clients.begin(), report.clients.end(),
            [](const ClientSummary& a, const ClientSummary& b) {
              return a.client_id < b.client_id;
            });
  return report;
}

}  // namespace fedfair
