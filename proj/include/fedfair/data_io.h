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
// Synthetic federations and the on-disk format.
//
// CSV, one row per example:
//   example_id,client_id,split,true_label,group_id,p_0,...,p_{C-1},neighbors
// neighbors is a ';'-separated id list, possibly empty. Class and group names
// live in a JSON sidecar next to the CSV (<path>.meta.json).
//
#ifndef FEDFAIR_DATA_IO_H_
#define FEDFAIR_DATA_IO_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fedfair/domain.h"

namespace fedfair {

using SplitFractions = std::array<double, 4>;  // train, valid, calib, test

inline constexpr SplitFractions kDefaultSplitFractions = {0.30, 0.20, 0.25,
                                                          0.25};

struct SyntheticConfig {
  uint32_t num_classes = 4;
  uint32_t num_groups = 2;
  uint32_t num_clients = 4;
  uint32_t examples_per_client = 1000;
  // Group frequencies; empty means uniform.
  std::vector<double> group_proportions;
  // Row g is the class distribution of group g (num_groups x num_classes,
  // row-major). Empty means uniform for every group.
  std::vector<double> group_bias;
  // Probability that the simulated model's top class is the true label.
  double model_accuracy = 0.8;
  // Optional per-group override of model_accuracy.
  std::vector<double> group_accuracy;
  // Logit of the predicted class before softening, and the width of the
  // uniform jitter added to every logit. jitter < margin keeps the predicted
  // class on top.
  double margin = 4.0;
  double jitter = 2.0;
  double temperature = 2.0;
  // Dirichlet concentration for the client partition; ignored when iid.
  double concentration = 0.5;
  // Equal-size shuffled partition instead of the Dirichlet one.
  bool iid = false;
  SplitFractions split = kDefaultSplitFractions;
  // Neighbours drawn per node inside its client; 0 means no graph.
  uint32_t graph_degree = 0;
  // Chance a drawn neighbour shares the node's true label.
  double homophily = 0.8;
  uint64_t seed = 0;

  absl::Status Validate() const;

  double AccuracyFor(GroupId g) const;
  double ClassProbability(GroupId g, Label y) const;
};

// Model output for one example of (group, label). Advances `rng`.
ProbabilityVector DrawProbabilities(const SyntheticConfig& config, GroupId g,
                                    Label label, std::mt19937_64& rng);

struct LabeledDraw {
  GroupId group = 0;
  Label label = 0;
  ProbabilityVector probs;
};

// An i.i.d. example from the generating distribution.
LabeledDraw DrawExample(const SyntheticConfig& config, std::mt19937_64& rng);

// Per class, proportions ~ Dirichlet(concentration) over K clients and
// largest-remainder counts. Returns a client index per example.
std::vector<ClientId> DirichletPartition(std::span<const Label> labels,
                                         uint32_t num_clients,
                                         double concentration, uint64_t seed);

struct SplitAssignment {
  std::vector<Split> splits;
  std::vector<std::string> warnings;
};

// Per (label, group) stratum, largest-remainder counts in the order train,
// valid, calib, test, assigned to the stratum's examples in input order.
absl::StatusOr<SplitAssignment> StratifiedSplit(std::span<const Label> labels,
                                                std::span<const GroupId> groups,
                                                const SplitFractions& fractions);

absl::StatusOr<Federation> GenerateSynthetic(const SyntheticConfig& config);

absl::Status WriteFederationCsv(const Federation& federation,
                                std::ostream& out);
// Reads rows into a federation with the given dimensions.
absl::StatusOr<Federation> ReadFederationCsv(std::istream& in,
                                             uint32_t num_groups);

absl::Status SaveFederation(const Federation& federation,
                            const std::string& path);
absl::StatusOr<Federation> LoadFederation(const std::string& path);

std::string MetadataPath(const std::string& csv_path);

}  // namespace fedfair

#endif  // FEDFAIR_DATA_IO_H_
