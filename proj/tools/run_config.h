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
// Experiment manifest shared by every command. A JSON file supplies the
// baseline and command-line flags override individual fields.
//
#ifndef FEDFAIR_TOOLS_RUN_CONFIG_H_
#define FEDFAIR_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fedfair/data_io.h"
#include "fedfair/federation.h"
#include "json.hpp"

namespace fedfair::cli {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  uint64_t seed = 0;
  double alpha = 0.1;

  FairnessMetric metric = FairnessMetric::kDemographicParity;
  // Empty means every class.
  std::vector<Label> positive_labels;
  double closeness = 0.1;

  ScoreConfig score;

  Estimator estimator = Estimator::kInterval;
  bool tightened_lower = true;
  double wilson_z = 1.96;

  bool use_sketch = false;
  uint32_t compression = QuantileSketch::kDefaultCompression;

  uint32_t rounds = 50;
  std::optional<double> eta;
  double mu = 0.9;

  Protocol protocol = Protocol::kCommEfficient;
  std::map<ClientId, Protocol> protocol_overrides;

  Mechanism dp_mechanism = Mechanism::kNone;
  double dp_epsilon = 1.0;
  double dp_delta = 1e-5;
  double dp_beta = 0.5;

  // Federation CSV read by every command except gen.
  std::string data_path;

  SyntheticConfig synthetic;

  absl::Status Validate() const;

  // Library options for a federation with `num_groups` groups and
  // `num_classes` classes.
  absl::StatusOr<RunOptions> ToRunOptions(uint32_t num_classes,
                                          uint32_t num_groups) const;
  SyntheticConfig ToSyntheticConfig() const;
};

// Unknown keys and ill-typed values are errors.
absl::StatusOr<RunConfig> RunConfigFromJson(const nlohmann::json& j);
absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path);
nlohmann::json RunConfigToJson(const RunConfig& config);

// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string ConfigDigest(const RunConfig& config);

}  // namespace fedfair::cli

#endif  // FEDFAIR_TOOLS_RUN_CONFIG_H_
