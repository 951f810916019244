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
// Client-local statistics. A client only ever reveals the messages built
// here; everything per-example stays inside LocalCalibration.
//
#ifndef FEDFAIR_CLIENT_STATS_H_
#define FEDFAIR_CLIENT_STATS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/domain.h"
#include "fedfair/messages.h"
#include "fedfair/scores.h"

namespace fedfair {

// Subpopulation predicate for the fairness metric: DP keeps group g, EO keeps
// group g with label y~, PE keeps group g with any other label.
bool PassesFilter(FairnessMetric metric, const Example& example, GroupId g,
                  Label tilde_y);

// Number of filtered calibration examples whose score at the candidate label
// y~ (not the true label) is <= lambda. `scores` rows follow `calib`.
uint64_t AlphaCount(std::span<const Example> calib, const ScoreMatrix& scores,
                    FairnessMetric metric, double lambda, GroupId g,
                    Label tilde_y);

// Wilson score interval for successes / trials at critical value z.
absl::StatusOr<std::pair<double, double>> WilsonBounds(uint64_t successes,
                                                       uint64_t trials,
                                                       double z);

struct EstimatorOptions {
  Estimator estimator = Estimator::kInterval;
  // Use alpha / (n_k + 1) as the interval lower entry instead of
  // alpha * n_gy / ((n_gy + 1)(n_k + 1)).
  bool tightened_lower = true;
  double wilson_z = 1.96;

  absl::Status Validate() const;
};

// Per-client state: the filtered calibration scores at every candidate
// positive label, sorted so each alpha count is a binary search.
class LocalCalibration {
 public:
  static absl::StatusOr<LocalCalibration> Create(const ClientDataset& dataset,
                                                 const ScoreMatrix& calib_scores,
                                                 const FairnessSpec& spec);

  ClientId client_id() const { return client_id_; }
  uint64_t n_k() const { return n_k_; }
  uint32_t num_groups() const { return num_groups_; }
  const std::vector<Label>& positive_labels() const { return positive_labels_; }

  // j indexes positive_labels.
  uint64_t n_gy(GroupId g, size_t j) const {
    return sorted_[j * num_groups_ + g].size();
  }
  uint64_t AlphaCount(GroupId g, size_t j, double lambda) const;

  ClientPriorMessage PriorMessage() const;

  // Per-group (lower, upper) entries, 2|G| reals.
  absl::StatusOr<ClientCgMessage> CommEfficientMessage(
      double lambda, size_t j, const EstimatorOptions& options) const;

  // Pairwise matrix pw[a][b] = u'[a] - l'[b] with the priors already divided
  // out. Groups flagged degenerate in `priors` contribute zero rows and
  // columns; any other group with a non-positive prior is an error.
  absl::StatusOr<ClientCgMessage> EnhancedPrivacyMessage(
      double lambda, size_t j, const PriorEstimates& priors,
      const EstimatorOptions& options) const;

 private:
  struct Entry {
    double lower = 0.0;
    double upper = 0.0;
  };
  absl::StatusOr<Entry> GroupEntry(GroupId g, size_t j, double lambda,
                                   const EstimatorOptions& options) const;

  ClientId client_id_ = 0;
  uint64_t n_k_ = 0;
  uint32_t num_groups_ = 0;
  std::vector<Label> positive_labels_;
  // [j * num_groups + g] -> ascending scores s(x, y~_j) over the filter.
  std::vector<std::vector<double>> sorted_;
};

}  // namespace fedfair

#endif  // FEDFAIR_CLIENT_STATS_H_
