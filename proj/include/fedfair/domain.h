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
#ifndef FEDFAIR_DOMAIN_H_
#define FEDFAIR_DOMAIN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace fedfair {

using ClientId = uint32_t;
using ExampleId = uint64_t;
using Label = uint32_t;
using GroupId = uint32_t;

// Probability entries may drift from a unit sum by this much (CSV round trips)
// before a vector is rejected.
inline constexpr double kProbabilityTolerance = 1e-6;

enum class Split : uint8_t { kTrain, kValid, kCalib, kTest };

std::string_view SplitName(Split split);
absl::StatusOr<Split> ParseSplit(std::string_view name);

// A softmaxed model output over C classes. Vectors within kProbabilityTolerance
// of a unit sum are renormalized on construction; sums that already agree to
// 1e-12 are kept bit-for-bit so that files round-trip exactly.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;

  static absl::StatusOr<ProbabilityVector> Create(std::vector<double> probs);

  std::span<const double> values() const { return probs_; }
  size_t size() const { return probs_.size(); }
  double operator[](size_t i) const { return probs_[i]; }

  bool operator==(const ProbabilityVector&) const = default;

 private:
  explicit ProbabilityVector(std::vector<double> probs)
      : probs_(std::move(probs)) {}

  std::vector<double> probs_;
};

// One data point. Feature vectors are never stored, only the model output.
struct Example {
  ExampleId example_id = 0;
  ClientId client_id = 0;
  Split split = Split::kCalib;
  Label true_label = 0;
  GroupId group_id = 0;
  ProbabilityVector probs;
  // In-client 1-hop neighbourhood; empty when the node is isolated or the
  // data carries no graph.
  std::vector<ExampleId> neighbors;

  bool operator==(const Example&) const = default;
};

enum class FairnessMetric : uint8_t {
  kDemographicParity,
  kEqualOpportunity,
  kPredictiveEquality,
};

std::string_view MetricName(FairnessMetric metric);
absl::StatusOr<FairnessMetric> ParseMetric(std::string_view name);

// Groups are the dense range [0, num_groups).
struct FairnessSpec {
  FairnessMetric metric = FairnessMetric::kDemographicParity;
  uint32_t num_groups = 2;
  std::vector<Label> positive_labels;
  double closeness = 0.1;

  absl::Status Validate(uint32_t num_classes) const;

  // Position of `label` within positive_labels, or -1.
  int PositiveIndex(Label label) const;
};

struct ClientDataset {
  ClientId client_id = 0;
  std::vector<Example> calib;
  std::vector<Example> test;
  // Train and validation rows. Carried for file round trips only.
  std::vector<Example> other;

  size_t n() const { return calib.size(); }

  bool operator==(const ClientDataset&) const = default;
};

struct Federation {
  uint32_t num_classes = 0;
  uint32_t num_groups = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> group_names;
  // Ascending client_id.
  std::vector<ClientDataset> clients;

  bool HasGraph() const;
  const ClientDataset* FindClient(ClientId id) const;

  bool operator==(const Federation&) const = default;
};

struct ClientSummary {
  ClientId client_id = 0;
  size_t n_calib = 0;
  size_t n_test = 0;
  // Calibration counts n_k^{(g,y~)} indexed [j * num_groups + g], j the
  // position of y~ in the spec's positive labels.
  std::vector<uint64_t> group_label_counts;

  bool operator==(const ClientSummary&) const = default;
};

struct ValidationReport {
  std::vector<ClientSummary> clients;
  // (group, positive label) pairs with no calibration support on any client.
  std::vector<std::pair<GroupId, Label>> unsupported_pairs;
  std::vector<std::string> warnings;

  bool operator==(const ValidationReport&) const = default;
};

// Structural checks over a whole federation: index ranges, duplicate ids,
// empty calibration sets, neighbour references. Pure.
absl::StatusOr<ValidationReport> ValidateFederation(const Federation& federation,
                                                    const FairnessSpec& spec);

}  // namespace fedfair

#endif  // FEDFAIR_DOMAIN_H_
