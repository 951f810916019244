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
#include "fedfair/wire.h"

#include <bit>
#include <limits>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "fmt/printf.h"
#include "fmt/ranges.h"

namespace fedfair {

std::string_view MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kPriorRequest:
      return "prior_request";
    case MessageKind::kPriorReply:
      return "prior_reply";
    case MessageKind::kCgRequest:
      return "cg_request";
    case MessageKind::kCgReply:
      return "cg_reply";
    case MessageKind::kAuditRequest:
      return "audit_request";
    case MessageKind::kAuditReply:
      return "audit_reply";
  }
  return "unknown";
}

void ByteWriter::PutU32(uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void ByteWriter::PutF64(double v) {
  uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    bytes_.push_back(static_cast<uint8_t>(bits >> (8 * i)));
  }
}

void ByteWriter::PutF64Array(std::span<const double> values) {
  PutU32(static_cast<uint32_t>(values.size()));
  for (double v : values) PutF64(v);
}

void ByteWriter::PutU32Array(std::span<const uint32_t> values) {
  PutU32(static_cast<uint32_t>(values.size()));
  for (uint32_t v : values) PutU32(v);
}

absl::Status ByteReader::Need(size_t n) const {
  if (remaining() < n) {
    return absl::DataLossError(fmt::sprintf(
        "truncated message: need %d bytes at offset %d, have %d", n, pos_,
        remaining()));
  }
  return absl::OkStatus();
}

absl::StatusOr<uint8_t> ByteReader::GetU8() {
  if (absl::Status s = Need(1); !s.ok()) return s;
  return bytes_[pos_++];
}

absl::StatusOr<uint32_t> ByteReader::GetU32() {
  if (absl::Status s = Need(4); !s.ok()) return s;
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
  }
  pos_ += 4;
  return v;
}

absl::StatusOr<double> ByteReader::GetF64() {
  if (absl::Status s = Need(8); !s.ok()) return s;
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
  }
  pos_ += 8;
  return std::bit_cast<double>(bits);
}

absl::StatusOr<std::vector<double>> ByteReader::GetF64s(size_t count) {
  if (count > remaining() / 8) {
    return absl::DataLossError("array length exceeds message");
  }
  std::vector<double> out(count);
  for (double& v : out) v = *GetF64();
  return out;
}

absl::StatusOr<std::vector<double>> ByteReader::GetF64Array() {
  absl::StatusOr<uint32_t> n = GetU32();
  if (!n.ok()) return n.status();
  return GetF64s(*n);
}

absl::StatusOr<std::vector<uint32_t>> ByteReader::GetU32Array() {
  absl::StatusOr<uint32_t> n = GetU32();
  if (!n.ok()) return n.status();
  if (*n > remaining() / 4) {
    return absl::DataLossError("array length exceeds message");
  }
  std::vector<uint32_t> out(*n);
  for (uint32_t& v : out) v = *GetU32();
  return out;
}

absl::Status ByteReader::ExpectEnd() const {
  if (remaining() != 0) {
    return absl::DataLossError(
        fmt::sprintf("%d trailing bytes in message", remaining()));
  }
  return absl::OkStatus();
}

std::vector<uint8_t> SerializeEnvelope(const Envelope& envelope) {
  ByteWriter w;
  w.PutU8(static_cast<uint8_t>(envelope.kind));
  w.PutU32(envelope.round);
  w.PutU32(envelope.sender);
  w.PutU32(static_cast<uint32_t>(envelope.payload.size()));
  std::vector<uint8_t> out = w.Release();
  out.insert(out.end(), envelope.payload.begin(), envelope.payload.end());
  return out;
}

namespace {

absl::StatusOr<MessageKind> ToKind(uint8_t tag) {
  if (tag < 1 || tag > 6) {
    return absl::DataLossError(fmt::sprintf("unknown message kind %d", tag));
  }
  return static_cast<MessageKind>(tag);
}

// Collapses a list of intermediate statuses into the first failure.
absl::Status FirstError(std::initializer_list<absl::Status> statuses) {
  for (const absl::Status& s : statuses) {
    if (!s.ok()) return s;
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<Envelope> DeserializeEnvelope(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  absl::StatusOr<uint8_t> tag = r.GetU8();
  absl::StatusOr<uint32_t> round = r.GetU32();
  absl::StatusOr<uint32_t> sender = r.GetU32();
  absl::StatusOr<uint32_t> len = r.GetU32();
  if (absl::Status s = FirstError(
          {tag.status(), round.status(), sender.status(), len.status()});
      !s.ok()) {
    return s;
  }
  absl::StatusOr<MessageKind> kind = ToKind(*tag);
  if (!kind.ok()) return kind.status();
  if (r.remaining() != *len) {
    return absl::DataLossError("envelope length does not match payload");
  }
  Envelope e;
  e.kind = *kind;
  e.round = *round;
  e.sender = *sender;
  e.payload.assign(bytes.begin() + kEnvelopeHeaderBytes, bytes.end());
  return e;
}

std::vector<uint8_t> EncodePriorRequest(const PriorRequest& request) {
  ByteWriter w;
  w.PutU8(static_cast<uint8_t>(request.metric));
  w.PutU32(request.num_groups);
  w.PutU32Array(request.positive_labels);
  return w.Release();
}

absl::StatusOr<PriorRequest> DecodePriorRequest(
    std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  absl::StatusOr<uint8_t> metric = r.GetU8();
  absl::StatusOr<uint32_t> groups = r.GetU32();
  absl::StatusOr<std::vector<uint32_t>> labels = r.GetU32Array();
  if (absl::Status s = FirstError(
          {metric.status(), groups.status(), labels.status(), r.ExpectEnd()});
      !s.ok()) {
    return s;
  }
  if (*metric > 2) return absl::DataLossError("unknown fairness metric tag");
  PriorRequest req;
  req.metric = static_cast<FairnessMetric>(*metric);
  req.num_groups = *groups;
  req.positive_labels = *std::move(labels);
  return req;
}

std::vector<uint8_t> EncodePriorReply(const ClientPriorMessage& message) {
  ByteWriter w;
  w.PutU32(static_cast<uint32_t>(message.n_k));
  w.PutU32(message.num_groups);
  w.PutU32Array(message.positive_labels);
  w.PutU32(static_cast<uint32_t>(message.ratios.size()));
  for (const PriorRatios& r : message.ratios) {
    w.PutF64(r.lo);
    w.PutF64(r.hi);
    w.PutF64(r.mle);
  }
  return w.Release();
}

absl::StatusOr<ClientPriorMessage> DecodePriorReply(
    std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  absl::StatusOr<uint32_t> n_k = r.GetU32();
  absl::StatusOr<uint32_t> groups = r.GetU32();
  absl::StatusOr<std::vector<uint32_t>> labels = r.GetU32Array();
  absl::StatusOr<uint32_t> count = r.GetU32();
  if (absl::Status s = FirstError(
          {n_k.status(), groups.status(), labels.status(), count.status()});
      !s.ok()) {
    return s;
  }
  if (size_t{*groups} * labels->size() != *count) {
    return absl::DataLossError("prior reply shape mismatch");
  }
  absl::StatusOr<std::vector<double>> flat = r.GetF64s(3 * size_t{*count});
  if (!flat.ok()) return flat.status();
  if (absl::Status s = r.ExpectEnd(); !s.ok()) return s;
  ClientPriorMessage m;
  m.n_k = *n_k;
  m.num_groups = *groups;
  m.positive_labels = *std::move(labels);
  m.ratios.resize(*count);
  for (size_t i = 0; i < *count; ++i) {
    m.ratios[i] = {(*flat)[3 * i], (*flat)[3 * i + 1], (*flat)[3 * i + 2]};
  }
  return m;
}

std::vector<uint8_t> EncodeCgRequest(const CgRequest& request) {
  ByteWriter w;
  w.PutF64(request.lambda);
  w.PutU32(request.positive_label);
  return w.Release();
}

absl::StatusOr<CgRequest> DecodeCgRequest(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  absl::StatusOr<double> lambda = r.GetF64();
  absl::StatusOr<uint32_t> label = r.GetU32();
  if (absl::Status s =
          FirstError({lambda.status(), label.status(), r.ExpectEnd()});
      !s.ok()) {
    return s;
  }
  return CgRequest{*lambda, *label};
}

std::vector<uint8_t> EncodeCgReply(const ClientCgMessage& message) {
  ByteWriter w;
  w.PutU8(static_cast<uint8_t>(message.estimator));
  uint32_t num_groups;
  std::vector<double> reals;
  if (const auto* ce = std::get_if<CommEfficientPayload>(&message.payload)) {
    w.PutU8(1);
    num_groups = static_cast<uint32_t>(ce->lower.size());
    reals = ce->lower;
    reals.insert(reals.end(), ce->upper.begin(), ce->upper.end());
  } else {
    const auto& ep = std::get<EnhancedPrivacyPayload>(message.payload);
    w.PutU8(2);
    num_groups = ep.num_groups;
    reals = ep.pairwise;
  }
  w.PutU32(static_cast<uint32_t>(message.n_k));
  w.PutU32(message.positive_label);
  w.PutU32(num_groups);
  w.PutU8(message.noise ? static_cast<uint8_t>(message.noise->kind) : 0);
  for (double v : reals) w.PutF64(v);
  if (message.noise) {
    for (double v : message.noise->scale) w.PutF64(v);
  }
  return w.Release();
}

absl::StatusOr<ClientCgMessage> DecodeCgReply(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  absl::StatusOr<uint8_t> estimator = r.GetU8();
  absl::StatusOr<uint8_t> shape = r.GetU8();
  absl::StatusOr<uint32_t> n_k = r.GetU32();
  absl::StatusOr<uint32_t> label = r.GetU32();
  absl::StatusOr<uint32_t> groups = r.GetU32();
  absl::StatusOr<uint8_t> noise = r.GetU8();
  if (absl::Status s = FirstError({estimator.status(), shape.status(),
                                   n_k.status(), label.status(),
                                   groups.status(), noise.status()});
      !s.ok()) {
    return s;
  }
  if (*estimator > 2) return absl::DataLossError("unknown estimator tag");
  if (*shape != 1 && *shape != 2) return absl::DataLossError("unknown shape");
  if (*noise > 2) return absl::DataLossError("unknown noise kind");
  const size_t g = *groups;
  const size_t count = *shape == 1 ? 2 * g : g * g;
  absl::StatusOr<std::vector<double>> reals = r.GetF64s(count);
  if (!reals.ok()) return reals.status();

  ClientCgMessage m;
  m.n_k = *n_k;
  m.positive_label = *label;
  m.estimator = static_cast<Estimator>(*estimator);
  if (*shape == 1) {
    CommEfficientPayload ce;
    ce.lower.assign(reals->begin(), reals->begin() + g);
    ce.upper.assign(reals->begin() + g, reals->end());
    m.payload = std::move(ce);
  } else {
    EnhancedPrivacyPayload ep;
    ep.num_groups = *groups;
    ep.pairwise = *std::move(reals);
    m.payload = std::move(ep);
  }
  if (*noise != 0) {
    absl::StatusOr<std::vector<double>> scales = r.GetF64s(count);
    if (!scales.ok()) return scales.status();
    m.noise = NoiseMeta{static_cast<NoiseMeta::Kind>(*noise), *std::move(scales)};
  }
  if (absl::Status s = r.ExpectEnd(); !s.ok()) return s;
  return m;
}

std::string EnvelopeJsonLine(const Envelope& envelope) {
  std::string hex = fmt::format("{:02x}", fmt::join(envelope.payload, ""));
  return fmt::sprintf(
      R"({"round":%d,"sender":%d,"kind":"%s","bytes":%d,"payload":"%s"})",
      envelope.round, envelope.sender, MessageKindName(envelope.kind),
      envelope.byte_count(), hex);
}

}  // namespace fedfair
