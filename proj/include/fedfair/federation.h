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
// In-process simulation of the client/server protocol. Every request and
// reply is serialized, counted and decoded again, so the server side only
// ever works from bytes a real deployment would send.
//
#ifndef FEDFAIR_FEDERATION_H_
#define FEDFAIR_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/client_stats.h"
#include "fedfair/domain.h"
#include "fedfair/messages.h"
#include "fedfair/optimizer.h"
#include "fedfair/privacy.h"
#include "fedfair/quantile.h"
#include "fedfair/scores.h"
#include "fedfair/server_agg.h"
#include "fedfair/wire.h"

namespace fedfair {

struct QuantileOptions {
  bool use_sketch = false;
  uint32_t compression = QuantileSketch::kDefaultCompression;
};

struct OptimizerOptions {
  uint32_t num_rounds = 50;
  std::optional<double> eta;
  double mu = 0.9;
};

struct RunOptions {
  double alpha = 0.1;
  FairnessSpec fairness;
  ScoreConfig score;
  EstimatorOptions estimator;
  QuantileOptions quantile;
  OptimizerOptions optimizer;
  Protocol default_protocol = Protocol::kCommEfficient;
  std::map<ClientId, Protocol> protocol_overrides;
  DpConfig dp;
  // Clients that never answer. For exercising the abort path.
  std::set<ClientId> unresponsive;

  absl::Status Validate() const;
};

// Aggregated answer to one gap query across all positive labels.
struct GapEvaluation {
  double lambda = 0.0;
  std::vector<CoverageGapResult> per_label;
  double cg = 0.0;  // max over labels
  size_t worst_label = 0;
  // Variance of the worst label's arg-max pair (gaussian noise only).
  double variance = 0.0;
};

struct RunReport {
  FcpQuantileResult calibration;
  double lambda_max = 0.0;
  OptimizerTrace trace;
  PriorEstimates priors;
  std::map<ClientId, uint64_t> bytes_by_client;
  uint64_t server_bytes = 0;
  uint32_t cg_rounds = 0;
  uint64_t messages = 0;
  // epsilon times the number of noised rounds; not enforced.
  double privacy_spend = 0.0;
  std::vector<std::string> warnings;
};

struct AuditReport {
  enum class Mode : uint8_t { kGlobal, kSubset, kMarginal };

  Mode mode = Mode::kGlobal;
  double lambda = 0.0;
  std::vector<ClientId> participants;
  PriorEstimates priors;
  GapEvaluation gap;
  double cg = 0.0;
  bool pass = false;
  bool pac = false;  // pass decided by PacAccept
  std::vector<std::string> warnings;
};

std::string_view AuditModeName(AuditReport::Mode mode);

class FederatedRun {
 public:
  // Validates and scores the federation. The federation must outlive the
  // run.
  static absl::StatusOr<FederatedRun> Create(const Federation& federation,
                                             const RunOptions& options);

  const RunOptions& options() const { return options_; }
  const std::vector<ClientScores>& scores() const { return scores_; }
  const ValidationReport& validation() const { return validation_; }

  Protocol ProtocolFor(ClientId id) const;

  // lambda_0 from the clients' calibration scores at their true labels.
  absl::StatusOr<FcpQuantileResult> Calibrate(
      std::span<const ClientId> participants) const;

  // Largest calibration score over every candidate label.
  double LambdaMax(std::span<const ClientId> participants) const;

  // prior_request / prior_reply exchange.
  absl::StatusOr<PriorEstimates> RunPriorRound(
      std::span<const ClientId> participants);

  // One cg_request per client per positive label (audit_request when
  // `audit` is set), aggregated on the server.
  absl::StatusOr<GapEvaluation> QueryGap(double lambda,
                                         std::span<const ClientId> participants,
                                         const PriorEstimates& priors,
                                         bool audit = false);

  absl::StatusOr<RunReport> RunFairOpt();

  // One prior round and one gap round over `subset` at a threshold chosen
  // elsewhere. An empty subset is an error.
  absl::StatusOr<AuditReport> Audit(std::span<const ClientId> subset,
                                    double lambda);

  std::vector<ClientId> AllClients() const;

  const std::vector<Envelope>& transcript() const { return transcript_; }
  std::string TranscriptJsonLines() const;
  const std::map<ClientId, uint64_t>& bytes_by_client() const {
    return bytes_by_client_;
  }
  uint64_t server_bytes() const { return server_bytes_; }

 private:
  FederatedRun(const Federation& federation, RunOptions options)
      : federation_(&federation), options_(std::move(options)) {}

  // Serializes, records and returns the wire bytes of an envelope.
  Envelope Send(MessageKind kind, uint32_t sender,
                std::vector<uint8_t> payload);
  absl::Status CheckResponsive(std::span<const ClientId> participants) const;
  absl::StatusOr<size_t> ClientIndex(ClientId id) const;

  const Federation* federation_;
  RunOptions options_;
  ValidationReport validation_;
  std::vector<ClientScores> scores_;
  std::vector<LocalCalibration> locals_;
  uint32_t round_ = 0;
  std::vector<Envelope> transcript_;
  std::map<ClientId, uint64_t> bytes_by_client_;
  uint64_t server_bytes_ = 0;
  uint32_t noised_rounds_ = 0;
};

}  // namespace fedfair

#endif  // FEDFAIR_FEDERATION_H_
