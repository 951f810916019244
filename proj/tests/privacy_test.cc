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
#include "fedfair/privacy.h"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

namespace fedfair {
namespace {

PriorEstimates TwoGroupPriors() {
  PriorEstimates p;
  p.num_groups = 2;
  p.positive_labels = {0};
  p.lower = {0.2, 0.3};
  p.upper = {0.25, 0.35};
  p.point = {0.22, 0.32};
  p.degenerate = {false, false};
  return p;
}

ClientCgMessage CeMessage() {
  ClientCgMessage m;
  m.n_k = 50;
  m.payload = CommEfficientPayload{{0.1, 0.12}, {0.14, 0.16}};
  return m;
}

ClientCgMessage EpMessage() {
  ClientCgMessage m;
  m.n_k = 50;
  m.payload = EnhancedPrivacyPayload{2, {0.1, -0.2, 0.3, 0.05}};
  return m;
}

TEST(SensitivityTest, HandValues) {
  EXPECT_DOUBLE_EQ(*Sensitivity(SensitivityEntry::kPairwise, 10, 0.5, 0.5),
                   0.4);
  EXPECT_DOUBLE_EQ(*Sensitivity(SensitivityEntry::kUpper, 10, 0.5, 0.8), 0.2);
  EXPECT_DOUBLE_EQ(*Sensitivity(SensitivityEntry::kLower, 10, 0.8, 0.5), 0.2);
  EXPECT_LT(*Sensitivity(SensitivityEntry::kPairwise, 1u << 30, 0.5, 0.5),
            1e-8);
  EXPECT_FALSE(Sensitivity(SensitivityEntry::kUpper, 0, 0.5, 0.5).ok());
  EXPECT_FALSE(Sensitivity(SensitivityEntry::kUpper, 10, 0.0, 0.5).ok());
}

TEST(GaussianSigmaTest, HandValueAndScaling) {
  double sigma = *GaussianSigma(1.0, 1.0, 0.05);
  EXPECT_NEAR(sigma * sigma, 2.0 * std::log(25.0), 1e-12);
  EXPECT_NEAR(sigma, 2.5373, 1e-4);
  EXPECT_EQ(*GaussianSigma(0.0, 1.0, 0.05), 0.0);
  EXPECT_NEAR(*GaussianSigma(1.0, 2.0, 0.05), sigma / 2.0, 1e-15);
  for (double dh : {0.01, 0.3, 2.0}) {
    for (double eps : {0.1, 1.0, 8.0}) {
      for (double delta : {1e-6, 1e-3, 0.1}) {
        double closed = dh * std::sqrt(2.0 * std::log(1.25 / delta)) / eps;
        EXPECT_NEAR(*GaussianSigma(dh, eps, delta), closed, 1e-12);
      }
    }
  }
  EXPECT_FALSE(GaussianSigma(1.0, 0.0, 0.05).ok());
  EXPECT_FALSE(GaussianSigma(1.0, 1.0, 0.0).ok());
}

TEST(AggregatedVarianceTest, Values) {
  std::vector<double> gamma = {0.4, 0.6};
  std::vector<double> ones = {1.0, 1.0};
  std::vector<double> zeros = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(AggregatedVariance(gamma, ones), 0.52);
  EXPECT_EQ(AggregatedVariance(gamma, zeros), 0.0);
  std::vector<double> g1 = {1.0};
  std::vector<double> s1 = {1.7};
  EXPECT_DOUBLE_EQ(AggregatedVariance(g1, s1), 1.7 * 1.7);
}

TEST(NormalCdfTest, KnownValues) {
  EXPECT_EQ(NormalCdf(0.0), 0.5);
  EXPECT_NEAR(NormalCdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(NormalCdf(-1.0), 0.15865525393145707, 1e-12);
  for (double x = -6.0; x <= 6.0; x += 0.25) {
    EXPECT_NEAR(NormalCdf(x) + NormalCdf(-x), 1.0, 1e-15);
  }
}

TEST(PacAcceptTest, Examples) {
  EXPECT_TRUE(PacAccept(0.1, 0.1, 0.01, 0.4));
  EXPECT_FALSE(PacAccept(0.1, 0.1, 0.01, 0.6));
  EXPECT_TRUE(PacAccept(0.05, 0.1, 0.0, 0.5));
  EXPECT_TRUE(PacAccept(0.1, 0.1, 0.0, 0.5));
  EXPECT_FALSE(PacAccept(0.11, 0.1, 0.0, 0.5));
  // 0.1 + 0.2 rounds to one ulp above 0.3.
  EXPECT_TRUE(PacAccept(0.1 + 0.2, 0.3, 0.0, 0.5));
  EXPECT_FALSE(PacAccept(0.3 + 1e-9, 0.3, 0.0, 0.5));
}

TEST(PacAcceptTest, MonotoneInCloseness) {
  for (double var : {0.0, 1e-4, 0.01, 0.5}) {
    for (double beta : {0.1, 0.5, 0.9}) {
      bool seen_accept = false;
      for (int i = 0; i <= 200; ++i) {
        bool accept = PacAccept(0.3, i / 200.0, var, beta);
        if (seen_accept) {
          EXPECT_TRUE(accept);
        }
        seen_accept = seen_accept || accept;
      }
    }
  }
}

TEST(AddNoiseTest, NoneIsIdentity) {
  DpConfig dp;
  ClientCgMessage m = CeMessage();
  ClientCgMessage out = *AddNoise(m, TwoGroupPriors(), 0, dp, 1);
  EXPECT_EQ(out, m);
  EXPECT_FALSE(out.noise.has_value());
}

TEST(AddNoiseTest, ExponentialOnlyWidensGap) {
  DpConfig dp;
  dp.mechanism = Mechanism::kExponential;
  dp.epsilon = 1.0;
  PriorEstimates priors = TwoGroupPriors();
  for (uint64_t key = 0; key < 200; ++key) {
    ClientCgMessage ce = CeMessage();
    ClientCgMessage noisy = *AddNoise(ce, priors, 0, dp, key);
    const auto& exact = std::get<CommEfficientPayload>(ce.payload);
    const auto& got = std::get<CommEfficientPayload>(noisy.payload);
    for (size_t g = 0; g < 2; ++g) {
      EXPECT_GE(got.upper[g], exact.upper[g]);
      EXPECT_LE(got.lower[g], exact.lower[g]);
    }
    ASSERT_TRUE(noisy.noise.has_value());
    EXPECT_EQ(noisy.noise->kind, NoiseMeta::Kind::kExponential);

    ClientCgMessage ep = EpMessage();
    ClientCgMessage noisy_ep = *AddNoise(ep, priors, 0, dp, key);
    const auto& pw = std::get<EnhancedPrivacyPayload>(ep.payload).pairwise;
    const auto& got_pw =
        std::get<EnhancedPrivacyPayload>(noisy_ep.payload).pairwise;
    for (size_t i = 0; i < pw.size(); ++i) EXPECT_GE(got_pw[i], pw[i]);
  }
}

TEST(AddNoiseTest, ScalesFollowSensitivity) {
  DpConfig dp;
  dp.mechanism = Mechanism::kGaussian;
  dp.epsilon = 0.5;
  dp.delta = 1e-5;
  PriorEstimates priors = TwoGroupPriors();
  ClientCgMessage noisy = *AddNoise(CeMessage(), priors, 0, dp, 3);
  const std::vector<double>& scale = noisy.noise->scale;
  ASSERT_EQ(scale.size(), 4u);
  for (GroupId g = 0; g < 2; ++g) {
    EXPECT_NEAR(scale[g],
                *GaussianSigma(1.0 / (50 * priors.U(g, 0)), 0.5, 1e-5), 1e-15);
    EXPECT_NEAR(scale[2 + g],
                *GaussianSigma(1.0 / (50 * priors.L(g, 0)), 0.5, 1e-5), 1e-15);
  }
}

TEST(AddNoiseTest, GaussianIsKeyed) {
  DpConfig dp;
  dp.mechanism = Mechanism::kGaussian;
  PriorEstimates priors = TwoGroupPriors();
  ClientCgMessage a = *AddNoise(EpMessage(), priors, 0, dp, 42);
  ClientCgMessage b = *AddNoise(EpMessage(), priors, 0, dp, 42);
  ClientCgMessage c = *AddNoise(EpMessage(), priors, 0, dp, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(AddNoiseTest, DegenerateGroupsStayExact) {
  DpConfig dp;
  dp.mechanism = Mechanism::kGaussian;
  PriorEstimates priors = TwoGroupPriors();
  priors.lower[1] = 0.0;
  priors.degenerate[1] = true;
  ClientCgMessage m = CeMessage();
  auto& ce = std::get<CommEfficientPayload>(m.payload);
  ce.lower[1] = 0.0;
  ce.upper[1] = 0.0;
  ClientCgMessage noisy = *AddNoise(m, priors, 0, dp, 5);
  const auto& got = std::get<CommEfficientPayload>(noisy.payload);
  EXPECT_EQ(got.lower[1], 0.0);
  EXPECT_EQ(got.upper[1], 0.0);
  EXPECT_EQ(noisy.noise->scale[1], 0.0);
  EXPECT_NE(got.lower[0], ce.lower[0]);
}

TEST(AddNoiseTest, RejectsBadConfig) {
  DpConfig dp;
  dp.mechanism = Mechanism::kGaussian;
  dp.epsilon = 0.0;
  EXPECT_FALSE(AddNoise(CeMessage(), TwoGroupPriors(), 0, dp, 1).ok());
  dp.epsilon = 1.0;
  EXPECT_FALSE(AddNoise(CeMessage(), TwoGroupPriors(), 1, dp, 1).ok());
}

}  // namespace
}  // namespace fedfair
