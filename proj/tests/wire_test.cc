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

#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"

namespace fedfair {
namespace {

ClientCgMessage CeMessage(uint32_t groups) {
  ClientCgMessage m;
  m.n_k = 77;
  m.positive_label = 3;
  CommEfficientPayload p;
  for (uint32_t g = 0; g < groups; ++g) {
    p.lower.push_back(0.01 * g);
    p.upper.push_back(0.02 * g + 0.1);
  }
  m.payload = p;
  return m;
}

ClientCgMessage EpMessage(uint32_t groups) {
  ClientCgMessage m;
  m.n_k = 77;
  m.positive_label = 3;
  m.estimator = Estimator::kMle;
  EnhancedPrivacyPayload p;
  p.num_groups = groups;
  for (uint32_t i = 0; i < groups * groups; ++i) p.pairwise.push_back(0.1 * i);
  m.payload = p;
  return m;
}

TEST(ByteCodecTest, LittleEndianScalars) {
  ByteWriter w;
  w.PutU32(0x01020304u);
  w.PutF64(1.0);
  std::vector<uint8_t> b = w.Release();
  ASSERT_EQ(b.size(), 12u);
  EXPECT_EQ(b[0], 0x04);
  EXPECT_EQ(b[3], 0x01);
  EXPECT_EQ(b[11], 0x3f);
  ByteReader r(b);
  EXPECT_EQ(*r.GetU32(), 0x01020304u);
  EXPECT_EQ(*r.GetF64(), 1.0);
  EXPECT_TRUE(r.ExpectEnd().ok());
  EXPECT_FALSE(r.GetU8().ok());
}

TEST(EnvelopeTest, HeaderOnlyAndRoundTrip) {
  Envelope e{MessageKind::kCgRequest, 7, kServerId, {}};
  std::vector<uint8_t> wire = SerializeEnvelope(e);
  EXPECT_EQ(wire.size(), kEnvelopeHeaderBytes);
  EXPECT_EQ(*DeserializeEnvelope(wire), e);

  e.payload = {1, 2, 3};
  wire = SerializeEnvelope(e);
  EXPECT_EQ(wire.size(), e.byte_count());
  EXPECT_EQ(*DeserializeEnvelope(wire), e);
  wire.pop_back();
  EXPECT_FALSE(DeserializeEnvelope(wire).ok());
  wire = SerializeEnvelope(e);
  wire[0] = 99;
  EXPECT_FALSE(DeserializeEnvelope(wire).ok());
}

TEST(PayloadTest, RequestsRoundTrip) {
  PriorRequest pr{{1, 4}, 3, FairnessMetric::kPredictiveEquality};
  EXPECT_EQ(*DecodePriorRequest(EncodePriorRequest(pr)), pr);
  CgRequest cr{0.4375, 2};
  EXPECT_EQ(*DecodeCgRequest(EncodeCgRequest(cr)), cr);
}

TEST(PayloadTest, PriorReplyRoundTrip) {
  ClientPriorMessage m;
  m.n_k = 10;
  m.num_groups = 2;
  m.positive_labels = {0};
  m.ratios = {{0.1, 0.2, 0.11}, {0.3, 0.4, 0.33}};
  EXPECT_EQ(*DecodePriorReply(EncodePriorReply(m)), m);
}

TEST(PayloadTest, CgReplyRoundTrip) {
  for (const ClientCgMessage& m : {CeMessage(3), EpMessage(3)}) {
    EXPECT_EQ(*DecodeCgReply(EncodeCgReply(m)), m);
    ClientCgMessage noisy = m;
    noisy.noise = NoiseMeta{NoiseMeta::Kind::kGaussian,
                            std::vector<double>(m.num_reals(), 0.25)};
    std::vector<uint8_t> bytes = EncodeCgReply(noisy);
    EXPECT_EQ(bytes.size(), kCgReplyFixedBytes + 16 * m.num_reals());
    EXPECT_EQ(*DecodeCgReply(bytes), noisy);
    bytes.push_back(0);
    EXPECT_FALSE(DecodeCgReply(bytes).ok());
  }
}

TEST(PayloadTest, ShapesAndByteCounts) {
  ClientCgMessage ce = CeMessage(6);
  ClientCgMessage ep = EpMessage(6);
  EXPECT_EQ(ce.num_reals(), 12u);
  EXPECT_EQ(ep.num_reals(), 36u);
  size_t ce_bytes = EncodeCgReply(ce).size();
  size_t ep_bytes = EncodeCgReply(ep).size();
  EXPECT_EQ(ce_bytes, kCgReplyFixedBytes + 96);
  EXPECT_EQ(ep_bytes, kCgReplyFixedBytes + 288);
  EXPECT_EQ(static_cast<double>(ep_bytes - kCgReplyFixedBytes) /
                static_cast<double>(ce_bytes - kCgReplyFixedBytes),
            3.0);
}

TEST(PayloadTest, RejectsMalformedPairwise) {
  ClientCgMessage ep = EpMessage(2);
  std::vector<uint8_t> bytes = EncodeCgReply(ep);
  // The shape byte follows the estimator byte.
  bytes[1] = 7;
  EXPECT_FALSE(DecodeCgReply(bytes).ok());
}

TEST(JsonLineTest, FieldsAndHex) {
  Envelope e{MessageKind::kPriorReply, 2, 5, {0x00, 0xab, 0x10}};
  nlohmann::json j = nlohmann::json::parse(EnvelopeJsonLine(e));
  EXPECT_EQ(j["kind"], std::string(MessageKindName(e.kind)));
  EXPECT_EQ(j["round"], 2);
  EXPECT_EQ(j["sender"], 5);
  EXPECT_EQ(j["payload"], "00ab10");
  EXPECT_EQ(j["bytes"], kEnvelopeHeaderBytes + 3);
}

}  // namespace
}  // namespace fedfair
