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
// Binary encoding of protocol messages. Everything is little-endian: reals
// as f64, counts and ids as u32, tags as one byte.
//
// Envelope: u8 kind | u32 round | u32 sender | u32 payload_len | payload
//
// cg_reply / audit_reply payload:
//   u8 estimator | u8 shape (1 = comm-efficient, 2 = pairwise) |
//   u32 n_k | u32 positive_label | u32 num_groups | u8 noise kind (0 = none) |
//   reals (2G lower-then-upper, or G*G row-major) |
//   noise scales, same count, only when noise kind != 0
//
#ifndef FEDFAIR_WIRE_H_
#define FEDFAIR_WIRE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "fedfair/domain.h"
#include "fedfair/messages.h"

namespace fedfair {

enum class MessageKind : uint8_t {
  kPriorRequest = 1,
  kPriorReply = 2,
  kCgRequest = 3,
  kCgReply = 4,
  kAuditRequest = 5,
  kAuditReply = 6,
};

std::string_view MessageKindName(MessageKind kind);

inline constexpr size_t kEnvelopeHeaderBytes = 13;
// Fixed bytes of a cg / audit reply payload before the reals.
inline constexpr size_t kCgReplyFixedBytes = 15;

// The server's id in the sender field.
inline constexpr uint32_t kServerId = 0xffffffffu;

struct Envelope {
  MessageKind kind = MessageKind::kPriorRequest;
  uint32_t round = 0;
  uint32_t sender = 0;
  std::vector<uint8_t> payload;

  size_t byte_count() const { return kEnvelopeHeaderBytes + payload.size(); }

  bool operator==(const Envelope&) const = default;
};

class ByteWriter {
 public:
  void PutU8(uint8_t v) { bytes_.push_back(v); }
  void PutU32(uint32_t v);
  void PutF64(double v);
  // u32 length, then the values.
  void PutF64Array(std::span<const double> values);
  void PutU32Array(std::span<const uint32_t> values);

  const std::vector<uint8_t>& bytes() const { return bytes_; }
  std::vector<uint8_t> Release() { return std::move(bytes_); }

 private:
  std::vector<uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  absl::StatusOr<uint8_t> GetU8();
  absl::StatusOr<uint32_t> GetU32();
  absl::StatusOr<double> GetF64();
  absl::StatusOr<std::vector<double>> GetF64Array();
  absl::StatusOr<std::vector<uint32_t>> GetU32Array();
  // Exactly `count` f64 values with no prefix.
  absl::StatusOr<std::vector<double>> GetF64s(size_t count);

  size_t remaining() const { return bytes_.size() - pos_; }
  // Error unless every byte was consumed.
  absl::Status ExpectEnd() const;

 private:
  absl::Status Need(size_t n) const;

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

std::vector<uint8_t> SerializeEnvelope(const Envelope& envelope);
absl::StatusOr<Envelope> DeserializeEnvelope(std::span<const uint8_t> bytes);

// Payload codecs.
struct PriorRequest {
  std::vector<Label> positive_labels;
  uint32_t num_groups = 0;
  FairnessMetric metric = FairnessMetric::kDemographicParity;

  bool operator==(const PriorRequest&) const = default;
};

struct CgRequest {
  double lambda = 0.0;
  Label positive_label = 0;

  bool operator==(const CgRequest&) const = default;
};

std::vector<uint8_t> EncodePriorRequest(const PriorRequest& request);
absl::StatusOr<PriorRequest> DecodePriorRequest(std::span<const uint8_t> bytes);

std::vector<uint8_t> EncodePriorReply(const ClientPriorMessage& message);
absl::StatusOr<ClientPriorMessage> DecodePriorReply(
    std::span<const uint8_t> bytes);

// Shared by cg_request and audit_request.
std::vector<uint8_t> EncodeCgRequest(const CgRequest& request);
absl::StatusOr<CgRequest> DecodeCgRequest(std::span<const uint8_t> bytes);

// Shared by cg_reply and audit_reply.
std::vector<uint8_t> EncodeCgReply(const ClientCgMessage& message);
absl::StatusOr<ClientCgMessage> DecodeCgReply(std::span<const uint8_t> bytes);

// One JSON object per envelope, payload hex-encoded.
std::string EnvelopeJsonLine(const Envelope& envelope);

}  // namespace fedfair

#endif  // FEDFAIR_WIRE_H_
