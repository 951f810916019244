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
#include "fedfair/server_agg.h"

#include <cmath>
#include <random>

#include "fedfair/client_stats.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fedfair {
namespace {

using ::fedfair::testing::MakeExample;

ClientPriorMessage PriorMsg(uint64_t n, std::vector<uint64_t> n_gy) {
  ClientPriorMessage m;
  m.n_k = n;
  m.num_groups = static_cast<uint32_t>(n_gy.size());
  m.positive_labels = {0};
  const double nn = static_cast<double>(n);
  for (uint64_t c : n_gy) {
    const double m_gy = static_cast<double>(c);
    m.ratios.push_back({m_gy / (nn + 1), (m_gy + 1) / (nn + 1), m_gy / nn});
  }
  return m;
}

TEST(GammaWeightsTest, Values) {
  std::vector<uint64_t> n = {3, 5};
  std::vector<double> g = GammaWeights(n);
  EXPECT_DOUBLE_EQ(g[0], 0.4);
  EXPECT_DOUBLE_EQ(g[1], 0.6);
  std::vector<uint64_t> one = {17};
  EXPECT_EQ(GammaWeights(one), std::vector<double>{1.0});
  std::vector<uint64_t> equal = {9, 9, 9, 9};
  for (double v : GammaWeights(equal)) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(CompensatedSumTest, RecoversLostLowBits) {
  CompensatedSum s;
  s.Add(1.0);
  for (int i = 0; i < 1000; ++i) s.Add(1e-16);
  s.Add(-1.0);
  EXPECT_NEAR(s.Total(), 1e-13, 1e-20);
}

TEST(AggregatePriorsTest, SingleClient) {
  std::vector<ClientPriorMessage> m = {PriorMsg(4, {2})};
  PriorEstimates p = *AggregatePriors(m);
  EXPECT_DOUBLE_EQ(p.L(0, 0), 0.4);
  EXPECT_DOUBLE_EQ(p.U(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(p.pi(0, 0), 0.5);
}

TEST(AggregatePriorsTest, TwoClients) {
  std::vector<ClientPriorMessage> m = {PriorMsg(3, {1}), PriorMsg(5, {3})};
  PriorEstimates p = *AggregatePriors(m);
  EXPECT_NEAR(p.L(0, 0), 0.4, 1e-15);
  EXPECT_NEAR(p.U(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(p.pi(0, 0), 0.4 / 3.0 + 0.36, 1e-15);
  EXPECT_NEAR(p.pi(0, 0), 0.493333, 1e-6);
}

TEST(AggregatePriorsTest, EmptySupportIsDegenerate) {
  std::vector<ClientPriorMessage> m = {PriorMsg(3, {0, 3}), PriorMsg(5, {0, 5})};
  PriorEstimates p = *AggregatePriors(m);
  EXPECT_EQ(p.L(0, 0), 0.0);
  EXPECT_EQ(p.pi(0, 0), 0.0);
  EXPECT_TRUE(p.is_degenerate(0, 0));
  EXPECT_FALSE(p.is_degenerate(1, 0));
}

TEST(AggregatePriorsTest, ShapeMismatch) {
  std::vector<ClientPriorMessage> m = {PriorMsg(3, {1}), PriorMsg(5, {3, 1})};
  EXPECT_FALSE(AggregatePriors(m).ok());
  EXPECT_FALSE(AggregatePriors({}).ok());
}

PriorEstimates FlatPriors(uint32_t groups, double L, double U, double pi) {
  PriorEstimates p;
  p.num_groups = groups;
  p.positive_labels = {0};
  p.lower.assign(groups, L);
  p.upper.assign(groups, U);
  p.point.assign(groups, pi);
  p.degenerate.assign(groups, false);
  return p;
}

ClientCgMessage CeMessage(uint64_t n, std::vector<double> lower,
                          std::vector<double> upper,
                          Estimator est = Estimator::kInterval) {
  ClientCgMessage m;
  m.n_k = n;
  m.estimator = est;
  m.payload = CommEfficientPayload{std::move(lower), std::move(upper)};
  return m;
}

TEST(CoverageBoundsTest, SingleClientHandExample) {
  PriorEstimates p = FlatPriors(1, 0.4, 0.6, 0.5);
  std::vector<ClientCgMessage> untight = {CeMessage(4, {2.0 / 15}, {0.4})};
  CoverageBounds b = *CoverageBoundsFromMessages(untight, p, 0);
  EXPECT_DOUBLE_EQ(b.upper[0], 1.0);
  EXPECT_NEAR(b.lower[0], 0.2222, 1e-4);
  std::vector<ClientCgMessage> tight = {CeMessage(4, {0.2}, {0.4})};
  EXPECT_NEAR(CoverageBoundsFromMessages(tight, p, 0)->lower[0], 1.0 / 3.0,
              1e-15);
  std::vector<ClientCgMessage> mle = {
      CeMessage(4, {0.25}, {0.25}, Estimator::kMle)};
  CoverageBounds bm = *CoverageBoundsFromMessages(mle, p, 0);
  EXPECT_DOUBLE_EQ(bm.lower[0], 0.5);
  EXPECT_DOUBLE_EQ(bm.upper[0], 0.5);
}

TEST(ServerCoverageGapTest, CommEfficientVersusPairwiseWorkedExample) {
  PriorEstimates p = FlatPriors(2, 0.4, 0.6, 0.5);
  const double l0 = 2.0 / 15.0, l1 = 4.0 / 15.0;
  std::vector<ClientCgMessage> ce = {CeMessage(4, {l0, l1}, {0.4, 0.6})};
  CoverageGapResult r = *ServerCoverageGap(ce, p, 0);
  EXPECT_EQ(r.path, CoverageGapResult::Path::kAllCommEfficient);
  EXPECT_DOUBLE_EQ(r.bounds.upper[0], 1.0);
  EXPECT_DOUBLE_EQ(r.bounds.upper[1], 1.0);  // 1.5 capped
  EXPECT_NEAR(r.cg, 1.0 - 2.0 / 9.0, 1e-12);
  EXPECT_NEAR(r.cg, 0.7778, 1e-4);
  EXPECT_TRUE(r.clamped);

  // The same client on the pairwise path.
  ClientCgMessage ep;
  ep.n_k = 4;
  EnhancedPrivacyPayload pw;
  pw.num_groups = 2;
  const double u[] = {1.0, 1.5};
  const double l[] = {l0 / 0.6, l1 / 0.6};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) pw.pairwise.push_back(u[a] - l[b]);
  }
  ep.payload = pw;
  std::vector<ClientCgMessage> eps = {ep};
  CoverageGapResult q = *ServerCoverageGap(eps, p, 0);
  EXPECT_EQ(q.path, CoverageGapResult::Path::kPairwise);
  EXPECT_NEAR(q.raw_cg, 1.5 - 2.0 / 9.0, 1e-12);
  EXPECT_EQ(q.cg, 1.0);
  EXPECT_TRUE(q.clamped);
  EXPECT_EQ(q.argmax_upper, 1u);
  EXPECT_EQ(q.argmax_lower, 0u);
}

TEST(ServerCoverageGapTest, IdenticalGroupsUnderMleHaveZeroGap) {
  PriorEstimates p = FlatPriors(3, 0.3, 0.4, 0.35);
  std::vector<ClientCgMessage> m = {
      CeMessage(9, {0.2, 0.2, 0.2}, {0.2, 0.2, 0.2}, Estimator::kMle),
      CeMessage(5, {0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}, Estimator::kMle)};
  EXPECT_EQ(ServerCoverageGap(m, p, 0)->cg, 0.0);
}

TEST(ServerCoverageGapTest, Errors) {
  PriorEstimates p = FlatPriors(2, 0.4, 0.6, 0.5);
  std::vector<ClientCgMessage> mixed = {
      CeMessage(4, {0.1, 0.1}, {0.2, 0.2}),
      CeMessage(4, {0.1, 0.1}, {0.1, 0.1}, Estimator::kMle)};
  EXPECT_FALSE(ServerCoverageGap(mixed, p, 0).ok());
  EXPECT_FALSE(ServerCoverageGap({}, p, 0).ok());
  std::vector<ClientCgMessage> wrong_size = {CeMessage(4, {0.1}, {0.2})};
  EXPECT_FALSE(ServerCoverageGap(wrong_size, p, 0).ok());
}

TEST(ServerCoverageGapTest, DegenerateGroupIsExcluded) {
  PriorEstimates p = FlatPriors(2, 0.4, 0.6, 0.5);
  p.lower[1] = 0.0;
  p.degenerate[1] = true;
  std::vector<ClientCgMessage> m = {CeMessage(4, {0.2, 0.0}, {0.3, 0.2})};
  CoverageGapResult r = *ServerCoverageGap(m, p, 0);
  EXPECT_EQ(r.excluded_groups, std::vector<GroupId>{1});
  // Only group 0 remains: 0.3/0.4 - 0.2/0.6.
  EXPECT_NEAR(r.cg, 0.75 - 1.0 / 3.0, 1e-15);
}

TEST(MultiLabelCoverageGapTest, Max) {
  std::vector<CoverageGapResult> r(2);
  r[0].cg = 0.1;
  r[1].cg = 0.3;
  EXPECT_EQ(*MultiLabelCoverageGap(r), 0.3);
  EXPECT_EQ(*WorstLabel(r), 1u);
  EXPECT_EQ(*MultiLabelCoverageGap(std::span(r).first(1)), 0.1);
  EXPECT_FALSE(MultiLabelCoverageGap({}).ok());
}

// K random clients with every (g, y~) pair populated on every client.
struct RandomFederation {
  std::vector<LocalCalibration> locals;
  PriorEstimates priors;
};

RandomFederation MakeRandom(uint64_t seed, uint32_t groups, uint32_t clients,
                            int min_n, int max_n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  FairnessSpec spec;
  spec.metric = FairnessMetric::kEqualOpportunity;
  spec.num_groups = groups;
  spec.positive_labels = {0};
  RandomFederation f;
  std::vector<ClientPriorMessage> pm;
  ExampleId next = 0;
  for (uint32_t k = 0; k < clients; ++k) {
    const int n = min_n + static_cast<int>(rng() % (max_n - min_n + 1));
    ClientDataset d;
    d.client_id = k;
    ScoreMatrix s(n, 2);
    for (int i = 0; i < n; ++i) {
      // The first `groups` rows guarantee support for every group.
      GroupId g = i < static_cast<int>(groups) ? i : rng() % groups;
      Label y = i < static_cast<int>(groups) ? 0 : rng() % 2;
      d.calib.push_back(MakeExample(next++, k, Split::kCalib, y, g, {0.5, 0.5}));
      s.at(i, 0) = unif(rng);
      s.at(i, 1) = unif(rng);
    }
    f.locals.push_back(*LocalCalibration::Create(d, s, spec));
    pm.push_back(f.locals.back().PriorMessage());
  }
  f.priors = *AggregatePriors(pm);
  return f;
}

TEST(ServerCoverageGapPropertyTest, SandwichPreClamp) {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    RandomFederation f = MakeRandom(seed, 3, 1 + seed % 5, 5, 40);
    const double lambda = 0.1 + 0.8 * ((seed * 37) % 100) / 100.0;
    for (bool tight : {true, false}) {
      std::vector<ClientCgMessage> interval, mle;
      for (const LocalCalibration& l : f.locals) {
        interval.push_back(*l.CommEfficientMessage(
            lambda, 0, {Estimator::kInterval, tight}));
        mle.push_back(*l.CommEfficientMessage(lambda, 0, {Estimator::kMle}));
      }
      CoverageBounds b = *CoverageBoundsFromMessages(interval, f.priors, 0);
      CoverageBounds pi = *CoverageBoundsFromMessages(mle, f.priors, 0);
      for (GroupId g = 0; g < 3; ++g) {
        EXPECT_LE(b.lower[g], pi.lower[g] + 1e-9) << "seed " << seed;
        EXPECT_LE(pi.upper[g], b.upper[g] + 1e-9) << "seed " << seed;
      }
    }
  }
}

TEST(ServerCoverageGapPropertyTest, PathsAgreeWithoutClamping) {
  int compared = 0;
  for (uint64_t seed = 0; seed < 300; ++seed) {
    RandomFederation f = MakeRandom(1000 + seed, 2 + seed % 3, 1 + seed % 4,
                                    20, 60);
    const double lambda = 0.2 + 0.5 * ((seed * 13) % 100) / 100.0;
    for (Estimator est : {Estimator::kInterval, Estimator::kMle}) {
      EstimatorOptions opts{est};
      std::vector<ClientCgMessage> ce, ep, hybrid;
      for (size_t k = 0; k < f.locals.size(); ++k) {
        ce.push_back(*f.locals[k].CommEfficientMessage(lambda, 0, opts));
        ep.push_back(
            *f.locals[k].EnhancedPrivacyMessage(lambda, 0, f.priors, opts));
        hybrid.push_back(k % 2 == 0 ? ep.back() : ce.back());
      }
      CoverageGapResult a = *ServerCoverageGap(ce, f.priors, 0);
      CoverageGapResult b = *ServerCoverageGap(ep, f.priors, 0);
      CoverageGapResult h = *ServerCoverageGap(hybrid, f.priors, 0);
      if (a.clamped || b.clamped) continue;
      ++compared;
      EXPECT_NEAR(a.cg, b.cg, 1e-12);
      if (!h.clamped) {
        EXPECT_NEAR(h.cg, b.cg, 1e-12);
      }
    }
  }
  EXPECT_GT(compared, 50);
}

}  // namespace
}  // namespace fedfair
