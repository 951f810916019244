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
#include "fedfair/federation.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "fmt/ranges.h"
#include "fmt/printf.h"
#include "fedfair/internal/keyed_random.h"

namespace fedfair {

std::string_view AuditModeName(AuditReport::Mode mode) {
  switch (mode) {
    case AuditReport::Mode::kGlobal:
      return "global";
    case AuditReport::Mode::kSubset:
      return "subset";
    case AuditReport::Mode::kMarginal:
      return "marginal";
  }
  return "unknown";
}

absl::Status RunOptions::Validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return absl::InvalidArgumentError("alpha must lie in (0, 1)");
  }
  if (!(fairness.closeness > 0.0 && fairness.closeness <= 1.0)) {
    return absl::InvalidArgumentError("closeness must lie in (0, 1]");
  }
  if (absl::Status s = score.Validate(); !s.ok()) return s;
  if (absl::Status s = estimator.Validate(); !s.ok()) return s;
  if (quantile.use_sketch &&
      quantile.compression < QuantileSketch::kMinCompression) {
    return absl::InvalidArgumentError("sketch compression below minimum");
  }
  if (optimizer.num_rounds < 1) {
    return absl::InvalidArgumentError("optimizer needs at least one round");
  }
  if (!(optimizer.mu >= 0.0 && optimizer.mu < 1.0)) {
    return absl::InvalidArgumentError("mu must lie in [0, 1)");
  }
  if (optimizer.eta.has_value() && !(*optimizer.eta > 0.0)) {
    return absl::InvalidArgumentError("eta must be > 0");
  }
  return dp.Validate();
}

absl::StatusOr<FederatedRun> FederatedRun::Create(const Federation& federation,
                                                  const RunOptions& options) {
  if (absl::Status s = options.Validate(); !s.ok()) return s;
  absl::StatusOr<ValidationReport> report =
      ValidateFederation(federation, options.fairness);
  if (!report.ok()) return report.status();
  absl::StatusOr<std::vector<ClientScores>> scores =
      ScoreFederation(federation, options.score);
  if (!scores.ok()) return scores.status();

  FederatedRun run(federation, options);
  run.validation_ = *std::move(report);
  run.scores_ = *std::move(scores);
  for (size_t k = 0; k < federation.clients.size(); ++k) {
    absl::StatusOr<LocalCalibration> local = LocalCalibration::Create(
        federation.clients[k], run.scores_[k].calib, options.fairness);
    if (!local.ok()) return local.status();
    run.locals_.push_back(*std::move(local));
  }
  return run;
}

Protocol FederatedRun::ProtocolFor(ClientId id) const {
  auto it = options_.protocol_overrides.find(id);
  return it == options_.protocol_overrides.end() ? options_.default_protocol
                                                 : it->second;
}

std::vector<ClientId> FederatedRun::AllClients() const {
  std::vector<ClientId> ids;
  for (const ClientDataset& c : federation_->clients) ids.push_back(c.client_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

absl::StatusOr<size_t> FederatedRun::ClientIndex(ClientId id) const {
  for (size_t k = 0; k < federation_->clients.size(); ++k) {
    if (federation_->clients[k].client_id == id) return k;
  }
  return absl::NotFoundError(fmt::sprintf("unknown client %d", id));
}

absl::Status FederatedRun::CheckResponsive(
    std::span<const ClientId> participants) const {
  std::vector<ClientId> missing;
  for (ClientId id : participants) {
    if (options_.unresponsive.contains(id)) missing.push_back(id);
  }
  if (missing.empty()) return absl::OkStatus();
  return absl::UnavailableError(fmt::format(
      "run aborted; no reply from clients {}", fmt::join(missing, ", ")));
}

Envelope FederatedRun::Send(MessageKind kind, uint32_t sender,
                            std::vector<uint8_t> payload) {
  Envelope e{kind, round_, sender, std::move(payload)};
  std::vector<uint8_t> wire = SerializeEnvelope(e);
  if (sender == kServerId) {
    server_bytes_ += wire.size();
  } else {
    bytes_by_client_[sender] += wire.size();
  }
  transcript_.push_back(e);
  // The receiver only sees what came over the wire.
  return *DeserializeEnvelope(wire);
}

namespace {

absl::StatusOr<std::vector<ClientId>> Normalize(
    std::span<const ClientId> participants) {
  if (participants.empty()) {
    return absl::InvalidArgumentError("empty participant set");
  }
  std::vector<ClientId> ids(participants.begin(), participants.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    return absl::InvalidArgumentError("client listed twice");
  }
  return ids;
}

}  // namespace

absl::StatusOr<FcpQuantileResult> FederatedRun::Calibrate(
    std::span<const ClientId> participants) const {
  absl::StatusOr<std::vector<ClientId>> ids = Normalize(participants);
  if (!ids.ok()) return ids.status();
  std::vector<std::vector<double>> per_client;
  for (ClientId id : *ids) {
    absl::StatusOr<size_t> k = ClientIndex(id);
    if (!k.ok()) return k.status();
    const ClientDataset& c = federation_->clients[*k];
    std::vector<double> s;
    s.reserve(c.calib.size());
    for (size_t i = 0; i < c.calib.size(); ++i) {
      s.push_back(scores_[*k].calib.at(i, c.calib[i].true_label));
    }
    per_client.push_back(std::move(s));
  }
  if (!options_.quantile.use_sketch) {
    return FcpQuantile(per_client, options_.alpha);
  }
  std::vector<QuantileSketch> sketches;
  for (const std::vector<double>& s : per_client) {
    absl::StatusOr<QuantileSketch> sketch =
        QuantileSketch::Build(s, options_.quantile.compression);
    if (!sketch.ok()) return sketch.status();
    // Shipped as bytes, like every other client message.
    absl::StatusOr<QuantileSketch> received =
        QuantileSketch::Deserialize(sketch->Serialize());
    if (!received.ok()) return received.status();
    sketches.push_back(*std::move(received));
  }
  return FcpQuantileFromSketches(sketches, options_.alpha);
}

double FederatedRun::LambdaMax(std::span<const ClientId> participants) const {
  double m = -std::numeric_limits<double>::infinity();
  for (ClientId id : participants) {
    absl::StatusOr<size_t> k = ClientIndex(id);
    if (k.ok()) m = std::max(m, scores_[*k].calib.Max());
  }
  return m;
}

absl::StatusOr<PriorEstimates> FederatedRun::RunPriorRound(
    std::span<const ClientId> participants) {
  absl::StatusOr<std::vector<ClientId>> ids = Normalize(participants);
  if (!ids.ok()) return ids.status();
  if (absl::Status s = CheckResponsive(*ids); !s.ok()) return s;
  ++round_;
  const FairnessSpec& spec = options_.fairness;
  PriorRequest request{spec.positive_labels, spec.num_groups, spec.metric};
  std::vector<ClientPriorMessage> replies;
  for (ClientId id : *ids) {
    absl::StatusOr<size_t> k = ClientIndex(id);
    if (!k.ok()) return k.status();
    Envelope req =
        Send(MessageKind::kPriorRequest, kServerId, EncodePriorRequest(request));
    absl::StatusOr<PriorRequest> got = DecodePriorRequest(req.payload);
    if (!got.ok()) return got.status();
    Envelope reply = Send(MessageKind::kPriorReply, id,
                          EncodePriorReply(locals_[*k].PriorMessage()));
    absl::StatusOr<ClientPriorMessage> msg = DecodePriorReply(reply.payload);
    if (!msg.ok()) return msg.status();
    replies.push_back(*std::move(msg));
  }
  return AggregatePriors(replies);
}

absl::StatusOr<GapEvaluation> FederatedRun::QueryGap(
    double lambda, std::span<const ClientId> participants,
    const PriorEstimates& priors, bool audit) {
  absl::StatusOr<std::vector<ClientId>> ids = Normalize(participants);
  if (!ids.ok()) return ids.status();
  if (absl::Status s = CheckResponsive(*ids); !s.ok()) return s;
  ++round_;
  const MessageKind request_kind =
      audit ? MessageKind::kAuditRequest : MessageKind::kCgRequest;
  const MessageKind reply_kind =
      audit ? MessageKind::kAuditReply : MessageKind::kCgReply;
  const DpConfig& dp = options_.dp;

  GapEvaluation eval;
  eval.lambda = lambda;
  const std::vector<Label>& labels = options_.fairness.positive_labels;
  for (size_t j = 0; j < labels.size(); ++j) {
    std::vector<ClientCgMessage> replies;
    for (ClientId id : *ids) {
      absl::StatusOr<size_t> k = ClientIndex(id);
      if (!k.ok()) return k.status();
      Envelope req =
          Send(request_kind, kServerId, EncodeCgRequest({lambda, labels[j]}));

      // Client side.
      absl::StatusOr<CgRequest> got = DecodeCgRequest(req.payload);
      if (!got.ok()) return got.status();
      const LocalCalibration& local = locals_[*k];
      absl::StatusOr<ClientCgMessage> msg =
          ProtocolFor(id) == Protocol::kCommEfficient
              ? local.CommEfficientMessage(got->lambda, j, options_.estimator)
              : local.EnhancedPrivacyMessage(got->lambda, j, priors,
                                             options_.estimator);
      if (!msg.ok()) return msg.status();
      if (dp.mechanism != Mechanism::kNone) {
        msg = AddNoise(*msg, priors, j, dp,
                       internal::KeyedSeed({dp.seed, id, round_, labels[j]}));
        if (!msg.ok()) return msg.status();
      }
      Envelope reply = Send(reply_kind, id, EncodeCgReply(*msg));

      // Server side.
      absl::StatusOr<ClientCgMessage> decoded = DecodeCgReply(reply.payload);
      if (!decoded.ok()) return decoded.status();
      replies.push_back(*std::move(decoded));
    }
    absl::StatusOr<CoverageGapResult> result =
        ServerCoverageGap(replies, priors, j);
    if (!result.ok()) return result.status();
    eval.per_label.push_back(*std::move(result));
  }
  if (dp.mechanism != Mechanism::kNone) ++noised_rounds_;
  absl::StatusOr<size_t> worst = WorstLabel(eval.per_label);
  if (!worst.ok()) return worst.status();
  eval.worst_label = *worst;
  eval.cg = eval.per_label[*worst].cg;
  eval.variance = eval.per_label[*worst].variance;
  return eval;
}

namespace {

void AddDegenerateWarnings(const PriorEstimates& priors,
                           std::vector<std::string>& warnings) {
  for (size_t j = 0; j < priors.positive_labels.size(); ++j) {
    for (GroupId g = 0; g < priors.num_groups; ++g) {
      if (priors.is_degenerate(g, j)) {
        warnings.push_back(fmt::sprintf(
            "pair (group %d, label %d) has no calibration support and is "
            "excluded from the gap",
            g, priors.positive_labels[j]));
      }
    }
  }
}

}  // namespace

absl::StatusOr<RunReport> FederatedRun::RunFairOpt() {
  std::vector<ClientId> all = AllClients();
  if (absl::Status s = CheckResponsive(all); !s.ok()) return s;
  RunReport report;
  absl::StatusOr<PriorEstimates> priors = RunPriorRound(all);
  if (!priors.ok()) return priors.status();
  report.priors = *priors;

  absl::StatusOr<FcpQuantileResult> calibration = Calibrate(all);
  if (!calibration.ok()) return calibration.status();
  report.calibration = *calibration;
  const double lambda_0 = calibration->lambda;
  report.lambda_max = std::max(LambdaMax(all), lambda_0);

  uint32_t queries = 0;
  GapOracle oracle = [&](double lambda) -> absl::StatusOr<GapSample> {
    ++queries;
    absl::StatusOr<GapEvaluation> eval = QueryGap(lambda, all, report.priors);
    if (!eval.ok()) return eval.status();
    return GapSample{eval->cg, eval->variance};
  };
  OptimizerConfig config;
  config.num_rounds = options_.optimizer.num_rounds;
  config.eta = options_.optimizer.eta;
  config.mu = options_.optimizer.mu;
  config.lambda_max = report.lambda_max;
  config.beta = options_.dp.beta;
  absl::StatusOr<OptimizerTrace> trace =
      FairOptDescent(oracle, lambda_0, options_.fairness.closeness, config);
  if (!trace.ok()) return trace.status();
  report.trace = *std::move(trace);

  report.bytes_by_client = bytes_by_client_;
  report.server_bytes = server_bytes_;
  report.cg_rounds = queries;
  report.messages = transcript_.size();
  report.privacy_spend = options_.dp.mechanism == Mechanism::kNone
                             ? 0.0
                             : options_.dp.epsilon * noised_rounds_;
  report.warnings = validation_.warnings;
  if (report.calibration.vacuous) {
    report.warnings.push_back(
        "vacuous coverage: the conformal rank exceeds the number of "
        "calibration scores, lambda_0 is the largest score");
  }
  if (report.calibration.from_sketch) {
    report.warnings.push_back(
        "lambda_0 comes from merged sketches; the coverage interval is "
        "approximate");
  }
  if (!report.trace.feasible) {
    report.warnings.push_back(
        "no threshold met the closeness criterion; returning lambda_max");
  }
  AddDegenerateWarnings(report.priors, report.warnings);
  return report;
}

absl::StatusOr<AuditReport> FederatedRun::Audit(
    std::span<const ClientId> subset, double lambda) {
  absl::StatusOr<std::vector<ClientId>> ids = Normalize(subset);
  if (!ids.ok()) return ids.status();
  for (ClientId id : *ids) {
    if (absl::StatusOr<size_t> k = ClientIndex(id); !k.ok()) return k.status();
  }
  AuditReport report;
  report.lambda = lambda;
  report.participants = *ids;
  if (ids->size() == federation_->clients.size()) {
    report.mode = AuditReport::Mode::kGlobal;
  } else if (ids->size() == 1) {
    report.mode = AuditReport::Mode::kMarginal;
  } else {
    report.mode = AuditReport::Mode::kSubset;
  }

  absl::StatusOr<PriorEstimates> priors = RunPriorRound(*ids);
  if (!priors.ok()) return priors.status();
  report.priors = *std::move(priors);
  absl::StatusOr<GapEvaluation> gap =
      QueryGap(lambda, *ids, report.priors, /*audit=*/true);
  if (!gap.ok()) return gap.status();
  report.gap = *std::move(gap);
  report.cg = report.gap.cg;

  // Exponential noise only widens the gap, so the noiseless comparison stays
  // conservative; the variance is nonzero only under gaussian noise.
  report.pac = options_.dp.mechanism == Mechanism::kGaussian;
  report.pass = PacAccept(report.cg, options_.fairness.closeness,
                          report.gap.variance, options_.dp.beta);
  if (report.mode != AuditReport::Mode::kGlobal) {
    report.warnings.push_back(
        "guarantee holds for the mixture of participating clients only; "
        "participants are not checked against the calibration run");
  }
  AddDegenerateWarnings(report.priors, report.warnings);
  return report;
}

std::string FederatedRun::TranscriptJsonLines() const {
  std::string out;
  for (const Envelope& e : transcript_) {
    out += EnvelopeJsonLine(e);
    out += '\n';
  }
  return out;
}

}  // namespace fedfair
