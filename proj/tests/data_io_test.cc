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
#include "fedfair/data_io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fedfair {
namespace {

using ::fedfair::testing::TempDir;
using ::testing::HasSubstr;

SyntheticConfig SmallConfig() {
  SyntheticConfig config;
  config.num_clients = 3;
  config.examples_per_client = 200;
  config.num_groups = 2;
  config.seed = 5;
  return config;
}

std::string CsvOf(const Federation& fed) {
  std::ostringstream out;
  EXPECT_TRUE(WriteFederationCsv(fed, out).ok());
  return out.str();
}

size_t CountExamples(const Federation& fed) {
  size_t n = 0;
  for (const ClientDataset& c : fed.clients) {
    n += c.calib.size() + c.test.size() + c.other.size();
  }
  return n;
}

TEST(GenerateSyntheticTest, DeterministicBytes) {
  Federation a = *GenerateSynthetic(SmallConfig());
  Federation b = *GenerateSynthetic(SmallConfig());
  EXPECT_EQ(CsvOf(a), CsvOf(b));
  SyntheticConfig other = SmallConfig();
  other.seed = 6;
  EXPECT_NE(CsvOf(a), CsvOf(*GenerateSynthetic(other)));
}

TEST(GenerateSyntheticTest, NoExampleLostOrDuplicated) {
  Federation fed = *GenerateSynthetic(SmallConfig());
  EXPECT_EQ(CountExamples(fed), 600u);
  std::vector<ExampleId> ids;
  for (const ClientDataset& c : fed.clients) {
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) ids.push_back(e.example_id);
    }
  }
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::unique(ids.begin(), ids.end()), ids.end());
}

TEST(GenerateSyntheticTest, NoiselessModelPredictsTrueLabel) {
  SyntheticConfig config = SmallConfig();
  config.model_accuracy = 1.0;
  config.temperature = 1e-3;
  Federation fed = *GenerateSynthetic(config);
  for (const ClientDataset& c : fed.clients) {
    for (const Example& e : c.calib) {
      auto p = e.probs.values();
      EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(),
                static_cast<long>(e.true_label));
    }
  }
}

TEST(GenerateSyntheticTest, GraphStaysInsideClients) {
  SyntheticConfig config = SmallConfig();
  config.graph_degree = 3;
  Federation fed = *GenerateSynthetic(config);
  EXPECT_TRUE(fed.HasGraph());
  for (const ClientDataset& c : fed.clients) {
    std::map<ExampleId, const Example*> local;
    for (const auto* part : {&c.calib, &c.test, &c.other}) {
      for (const Example& e : *part) local[e.example_id] = &e;
    }
    for (const auto& [id, e] : local) {
      for (ExampleId n : e->neighbors) {
        ASSERT_TRUE(local.contains(n));
        const std::vector<ExampleId>& back = local[n]->neighbors;
        EXPECT_NE(std::find(back.begin(), back.end(), id), back.end());
      }
    }
  }
}

TEST(GenerateSyntheticTest, RejectsDegenerateConfig) {
  SyntheticConfig config = SmallConfig();
  config.examples_per_client = 0;
  EXPECT_FALSE(GenerateSynthetic(config).ok());
  config = SmallConfig();
  config.model_accuracy = 1.5;
  EXPECT_FALSE(GenerateSynthetic(config).ok());
}

TEST(DirichletPartitionTest, SingleClientAndDeterminism) {
  std::vector<Label> labels(500);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 4;
  for (ClientId k : DirichletPartition(labels, 1, 0.5, 3)) EXPECT_EQ(k, 0u);
  EXPECT_EQ(DirichletPartition(labels, 5, 0.5, 3),
            DirichletPartition(labels, 5, 0.5, 3));
}

TEST(DirichletPartitionTest, LargeConcentrationIsNearlyUniform) {
  std::vector<Label> labels(10000);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 4;
  std::vector<ClientId> owner = DirichletPartition(labels, 5, 1e6, 9);
  std::map<std::pair<Label, ClientId>, int> counts;
  for (size_t i = 0; i < labels.size(); ++i) ++counts[{labels[i], owner[i]}];
  for (Label y = 0; y < 4; ++y) {
    for (ClientId k = 0; k < 5; ++k) {
      EXPECT_NEAR((counts[{y, k}] / 2500.0), 0.2, 0.02);
    }
  }
}

TEST(StratifiedSplitTest, DefaultFractionsOnOneStratum) {
  std::vector<Label> labels(100, 1);
  std::vector<GroupId> groups(100, 0);
  SplitAssignment a = *StratifiedSplit(labels, groups, kDefaultSplitFractions);
  std::map<Split, int> counts;
  for (Split s : a.splits) ++counts[s];
  EXPECT_EQ(counts[Split::kTrain], 30);
  EXPECT_EQ(counts[Split::kValid], 20);
  EXPECT_EQ(counts[Split::kCalib], 25);
  EXPECT_EQ(counts[Split::kTest], 25);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(StratifiedSplitTest, AllTrainAndSmallStrata) {
  std::vector<Label> labels = {0, 0, 1, 1, 1, 1, 1};
  std::vector<GroupId> groups = {0, 0, 0, 0, 0, 0, 0};
  SplitAssignment a = *StratifiedSplit(labels, groups, {1.0, 0.0, 0.0, 0.0});
  for (Split s : a.splits) EXPECT_EQ(s, Split::kTrain);
  EXPECT_EQ(a.warnings.size(), 1u);
  EXPECT_FALSE(StratifiedSplit(labels, groups, {0.5, 0.1, 0.1, 0.1}).ok());
}

// Each (label, group) stratum gets its own share within one example.
TEST(StratifiedSplitTest, PerStratumProportions) {
  std::mt19937_64 rng(4);
  std::vector<Label> labels(3000);
  std::vector<GroupId> groups(3000);
  for (size_t i = 0; i < labels.size(); ++i) {
    labels[i] = rng() % 3;
    groups[i] = rng() % 2;
  }
  SplitAssignment a = *StratifiedSplit(labels, groups, kDefaultSplitFractions);
  std::map<std::pair<Label, GroupId>, std::map<Split, int>> counts;
  std::map<std::pair<Label, GroupId>, int> sizes;
  for (size_t i = 0; i < labels.size(); ++i) {
    ++counts[{labels[i], groups[i]}][a.splits[i]];
    ++sizes[{labels[i], groups[i]}];
  }
  constexpr Split kOrder[] = {Split::kTrain, Split::kValid, Split::kCalib,
                              Split::kTest};
  for (const auto& [key, n] : sizes) {
    for (int s = 0; s < 4; ++s) {
      EXPECT_LE(std::abs(counts[key][kOrder[s]] -
                         n * kDefaultSplitFractions[s]),
                1.0);
    }
  }
}

TEST(FederationFileTest, SaveLoadRoundTrip) {
  TempDir dir;
  SyntheticConfig config = SmallConfig();
  config.graph_degree = 2;
  Federation fed = *GenerateSynthetic(config);
  std::string path = dir.File("fed.csv");
  ASSERT_TRUE(SaveFederation(fed, path).ok());
  absl::StatusOr<Federation> back = LoadFederation(path);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, fed);
}

TEST(FederationFileTest, MissingProbabilityColumn) {
  std::istringstream in(
      "example_id,client_id,split,true_label,group_id,p_0,p_2,neighbors\n");
  absl::StatusOr<Federation> r = ReadFederationCsv(in, 2);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("p_1"));
}

TEST(FederationFileTest, ErrorsCarryLineNumbers) {
  std::istringstream in(
      "example_id,client_id,split,true_label,group_id,p_0,p_1,neighbors\n"
      "0,0,calib,0,0,0.5,0.5,\n"
      "1,0,calib,0,0,0.5,oops,\n");
  absl::StatusOr<Federation> r = ReadFederationCsv(in, 2);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("line 3"));
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("p_1"));
}

TEST(FederationFileTest, ForeignNeighborRejected) {
  std::istringstream in(
      "example_id,client_id,split,true_label,group_id,p_0,p_1,neighbors\n"
      "0,0,calib,0,0,0.5,0.5,1\n"
      "1,1,calib,0,0,0.5,0.5,\n");
  absl::StatusOr<Federation> r = ReadFederationCsv(in, 2);
  ASSERT_FALSE(r.ok());
  EXPECT_THAT(std::string(r.status().message()), HasSubstr("neighbor 1"));
}

TEST(FederationFileTest, MissingFileIsNotFound) {
  TempDir dir;
  EXPECT_EQ(LoadFederation(dir.File("absent.csv")).status().code(),
            absl::StatusCode::kNotFound);
}

}  // namespace
}  // namespace fedfair
