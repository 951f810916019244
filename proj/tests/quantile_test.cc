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
#include "fedfair/quantile.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fedfair/quantile_sketch.h"
#include "gtest/gtest.h"

namespace fedfair {
namespace {

// Fraction of `sorted` at or below v.
double RankOf(const std::vector<double>& sorted, double v) {
  return static_cast<double>(
             std::upper_bound(sorted.begin(), sorted.end(), v) -
             sorted.begin()) /
         static_cast<double>(sorted.size());
}

std::vector<double> Uniforms(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = unif(rng);
  return v;
}

TEST(ConformalRankTest, Values) {
  EXPECT_EQ(ConformalRank(9, 1, 0.1), 9u);
  EXPECT_EQ(ConformalRank(2, 1, 0.5), 2u);
  EXPECT_EQ(ConformalRank(18, 2, 0.2), 16u);
  EXPECT_EQ(ConformalRank(8, 2, 0.1), 9u);
  // (n + K)(1 - alpha) lands within rounding of an integer.
  EXPECT_EQ(ConformalRank(99, 1, 0.1), 90u);
  EXPECT_EQ(ConformalRank(1, 1, 0.9), 1u);
}

TEST(SplitConformalQuantileTest, HandExamples) {
  std::vector<double> nine = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  EXPECT_EQ(*SplitConformalQuantile(nine, 0.1), 0.9);
  std::vector<double> one = {0.42};
  EXPECT_EQ(*SplitConformalQuantile(one, 0.3), 0.42);
  std::vector<double> two = {0.4, 0.2};
  EXPECT_EQ(*SplitConformalQuantile(two, 0.5), 0.4);
  EXPECT_FALSE(SplitConformalQuantile({}, 0.1).ok());
}

TEST(FcpQuantileTest, TwoClientHandExample) {
  std::vector<std::vector<double>> clients(2);
  for (int i = 1; i <= 18; ++i) clients[i % 2].push_back(0.05 * i);
  absl::StatusOr<FcpQuantileResult> r = FcpQuantile(clients, 0.2);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->rank, 16u);
  EXPECT_DOUBLE_EQ(r->lambda, 0.80);
  EXPECT_EQ(r->num_scores, 18u);
  EXPECT_EQ(r->num_clients, 2u);
  EXPECT_FALSE(r->vacuous);
  EXPECT_DOUBLE_EQ(r->coverage_lower, 0.8);
  EXPECT_DOUBLE_EQ(r->coverage_upper, 0.8 + 2.0 / 20.0);
}

TEST(FcpQuantileTest, SingleClientIsSplitConformal) {
  std::vector<double> s = Uniforms(37, 4);
  std::vector<std::vector<double>> clients = {s};
  for (double alpha : {0.05, 0.1, 0.2, 0.5}) {
    EXPECT_EQ(FcpQuantile(clients, alpha)->lambda,
              *SplitConformalQuantile(s, alpha));
  }
}

TEST(FcpQuantileTest, RankBeyondDataIsVacuous) {
  std::vector<std::vector<double>> clients = {{0.1, 0.5, 0.3, 0.2},
                                              {0.7, 0.4, 0.6, 0.05}};
  absl::StatusOr<FcpQuantileResult> r = FcpQuantile(clients, 0.1);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->rank, 9u);
  EXPECT_TRUE(r->vacuous);
  EXPECT_EQ(r->lambda, 0.7);
}

TEST(FcpQuantileTest, Errors) {
  std::vector<std::vector<double>> none;
  EXPECT_FALSE(FcpQuantile(none, 0.1).ok());
  std::vector<std::vector<double>> empty = {{}, {}};
  EXPECT_FALSE(FcpQuantile(empty, 0.1).ok());
  std::vector<std::vector<double>> ok = {{0.1}};
  EXPECT_FALSE(FcpQuantile(ok, 0.0).ok());
  EXPECT_FALSE(FcpQuantile(ok, 1.0).ok());
}

TEST(FcpQuantileTest, MonotoneInClientCount) {
  std::vector<double> all = Uniforms(600, 8);
  double previous = -1.0;
  for (size_t k : {1, 2, 3, 5, 10, 20}) {
    std::vector<std::vector<double>> clients(k);
    for (size_t i = 0; i < all.size(); ++i) clients[i % k].push_back(all[i]);
    double lambda = FcpQuantile(clients, 0.1)->lambda;
    EXPECT_GE(lambda, previous);
    previous = lambda;
  }
}

TEST(QuantileSketchTest, Singleton) {
  std::vector<double> one = {0.37};
  QuantileSketch s = *QuantileSketch::Build(one);
  EXPECT_EQ(s.centroids().size(), 1u);
  for (double q : {0.0, 0.3, 0.5, 1.0}) EXPECT_EQ(*s.Quantile(q), 0.37);
}

TEST(QuantileSketchTest, ExactEndpointsAndSmallSets) {
  std::vector<double> v = {3, 1, 5, 2, 4};
  QuantileSketch s = *QuantileSketch::Build(v, 1000);
  EXPECT_EQ(*s.Quantile(0.0), 1.0);
  EXPECT_EQ(*s.Quantile(1.0), 5.0);
  EXPECT_EQ(*s.Quantile(0.5), 3.0);
}

TEST(QuantileSketchTest, Errors) {
  QuantileSketch empty;
  EXPECT_FALSE(empty.Quantile(0.5).ok());
  std::vector<double> v = {1.0};
  EXPECT_FALSE(QuantileSketch::Build(v, 5).ok());
  QuantileSketch a = *QuantileSketch::Build(v, 100);
  QuantileSketch b = *QuantileSketch::Build(v, 200);
  EXPECT_FALSE(QuantileSketch::Merge(a, b).ok());
  EXPECT_FALSE(a.Quantile(1.5).ok());
}

TEST(QuantileSketchTest, RankErrorOnUniforms) {
  std::vector<double> v = Uniforms(100000, 1);
  QuantileSketch s = *QuantileSketch::Build(v, 100);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_LE(std::abs(RankOf(sorted, *s.Quantile(0.9)) - 0.9), 0.005);
  EXPECT_LE(s.centroids().size(), 200u);
  double total = 0.0;
  for (size_t i = 0; i < s.centroids().size(); ++i) {
    total += s.centroids()[i].weight;
    if (i > 0) {
      EXPECT_LE(s.centroids()[i - 1].mean, s.centroids()[i].mean);
    }
  }
  EXPECT_EQ(total, s.total_weight());
  EXPECT_EQ(s.min(), sorted.front());
  EXPECT_EQ(s.max(), sorted.back());
}

TEST(QuantileSketchTest, OrderInsensitive) {
  std::vector<double> v = Uniforms(20000, 2);
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  QuantileSketch a = *QuantileSketch::Build(v);
  QuantileSketch b = *QuantileSketch::Build(sorted);
  for (double q : {0.1, 0.5, 0.9, 0.99}) {
    EXPECT_LE(std::abs(RankOf(sorted, *a.Quantile(q)) -
                       RankOf(sorted, *b.Quantile(q))),
              0.005);
  }
}

TEST(QuantileSketchTest, MergeMatchesPooled) {
  std::vector<double> all = Uniforms(100000, 3);
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  QuantileSketch merged(100);
  for (int k = 0; k < 8; ++k) {
    std::vector<double> part(all.begin() + k * 12500,
                             all.begin() + (k + 1) * 12500);
    merged = *QuantileSketch::Merge(merged, *QuantileSketch::Build(part));
  }
  EXPECT_EQ(merged.total_weight(), 100000.0);
  for (double q : {0.8, 0.9, 0.95}) {
    EXPECT_LE(std::abs(RankOf(sorted, *merged.Quantile(q)) - q), 0.01);
  }
}

TEST(QuantileSketchTest, MergeIdentityAndCommutativity) {
  QuantileSketch a = *QuantileSketch::Build(Uniforms(5000, 5));
  std::vector<double> bv = Uniforms(3000, 6);
  for (double& x : bv) x = 0.5 + x;
  QuantileSketch b = *QuantileSketch::Build(bv);
  QuantileSketch empty;
  QuantileSketch ae = *QuantileSketch::Merge(a, empty);
  EXPECT_EQ(ae.total_weight(), a.total_weight());
  EXPECT_EQ(ae.min(), a.min());
  EXPECT_EQ(ae.max(), a.max());
  QuantileSketch ab = *QuantileSketch::Merge(a, b);
  QuantileSketch ba = *QuantileSketch::Merge(b, a);
  EXPECT_EQ(ab.min(), a.min());
  EXPECT_EQ(ab.max(), b.max());
  for (int i = 0; i <= 100; ++i) {
    EXPECT_NEAR(*ab.Quantile(i / 100.0), *ba.Quantile(i / 100.0), 1e-9);
  }
}

TEST(QuantileSketchTest, QueryIsMonotone) {
  std::vector<double> v = Uniforms(10000, 7);
  for (double& x : v) x = x * x;
  QuantileSketch s = *QuantileSketch::Build(v, 20);
  double previous = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    double x = *s.Quantile(i / 1000.0);
    EXPECT_GE(x, previous);
    previous = x;
  }
}

TEST(QuantileSketchTest, SerializationRoundTripIsBitExact) {
  QuantileSketch s = *QuantileSketch::Build(Uniforms(4000, 9), 50);
  std::vector<uint8_t> bytes = s.Serialize();
  absl::StatusOr<QuantileSketch> back = QuantileSketch::Deserialize(bytes);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, s);
  EXPECT_EQ(back->Serialize(), bytes);
  bytes.pop_back();
  EXPECT_FALSE(QuantileSketch::Deserialize(bytes).ok());
}

TEST(FcpQuantileTest, SketchModeTracksExact) {
  std::vector<double> all = Uniforms(100000, 10);
  std::vector<std::vector<double>> clients(5);
  std::vector<QuantileSketch> sketches;
  for (size_t i = 0; i < all.size(); ++i) clients[i % 5].push_back(all[i]);
  for (const auto& c : clients) sketches.push_back(*QuantileSketch::Build(c));
  FcpQuantileResult exact = *FcpQuantile(clients, 0.1);
  FcpQuantileResult approx = *FcpQuantileFromSketches(sketches, 0.1);
  EXPECT_TRUE(approx.from_sketch);
  EXPECT_EQ(approx.rank, exact.rank);
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_LE(std::abs(RankOf(sorted, approx.lambda) -
                     RankOf(sorted, exact.lambda)),
            0.005);
}

}  // namespace
}  // namespace fedfair
