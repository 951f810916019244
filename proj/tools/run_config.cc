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
#include "run_config.h"

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <numeric>
#include <string_view>

#include "fmt/format.h"

namespace fedfair::cli {
namespace {

using nlohmann::json;

absl::Status CheckKeys(const json& obj, std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
  if (!obj.is_object()) {
    return absl::InvalidArgumentError(fmt::format("{} must be an object", where));
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || key == a;
    if (!known) {
      return absl::InvalidArgumentError(
          fmt::format("unknown key '{}' in {}", key, where));
    }
  }
  return absl::OkStatus();
}

// Reads obj[key] into *out when present.
template <typename T>
absl::Status Get(const json& obj, std::string_view key, T* out) {
  auto it = obj.find(key);
  if (it == obj.end()) return absl::OkStatus();
  try {
    *out = it->get<T>();
  } catch (const json::exception&) {
    return absl::InvalidArgumentError(fmt::format("bad value for '{}'", key));
  }
  return absl::OkStatus();
}

// Reads a string field and maps it through `parse`.
template <typename T, typename Parse>
absl::Status GetEnum(const json& obj, std::string_view key, Parse parse,
                     T* out) {
  std::string name;
  auto it = obj.find(key);
  if (it == obj.end()) return absl::OkStatus();
  if (absl::Status s = Get(obj, key, &name); !s.ok()) return s;
  absl::StatusOr<T> v = parse(name);
  if (!v.ok()) return v.status();
  *out = *v;
  return absl::OkStatus();
}

#define RETURN_IF_ERROR(expr)                \
  do {                                       \
    if (absl::Status _s = (expr); !_s.ok()) { \
      return _s;                             \
    }                                        \
  } while (0)

}  // namespace

absl::Status RunConfig::Validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    return absl::InvalidArgumentError("alpha must lie in (0, 1)");
  }
  if (!(closeness > 0.0 && closeness <= 1.0)) {
    return absl::InvalidArgumentError("closeness must lie in (0, 1]");
  }
  if (use_sketch && compression < QuantileSketch::kMinCompression) {
    return absl::InvalidArgumentError("compression too small");
  }
  if (rounds == 0) return absl::InvalidArgumentError("rounds must be >= 1");
  RETURN_IF_ERROR(score.Validate());
  EstimatorOptions est{estimator, tightened_lower, wilson_z};
  RETURN_IF_ERROR(est.Validate());
  DpConfig dp{dp_mechanism, dp_epsilon, dp_delta, dp_beta, seed};
  RETURN_IF_ERROR(dp.Validate());
  return absl::OkStatus();
}

absl::StatusOr<RunOptions> RunConfig::ToRunOptions(uint32_t num_classes,
                                                   uint32_t num_groups) const {
  RunOptions o;
  o.alpha = alpha;
  o.fairness.metric = metric;
  o.fairness.num_groups = num_groups;
  o.fairness.closeness = closeness;
  o.fairness.positive_labels = positive_labels;
  if (o.fairness.positive_labels.empty()) {
    o.fairness.positive_labels.resize(num_classes);
    std::iota(o.fairness.positive_labels.begin(),
              o.fairness.positive_labels.end(), Label{0});
  }
  o.score = score;
  o.score.seed = seed;
  o.estimator = {estimator, tightened_lower, wilson_z};
  o.quantile = {use_sketch, compression};
  o.optimizer = {rounds, eta, mu};
  o.default_protocol = protocol;
  o.protocol_overrides = protocol_overrides;
  o.dp = {dp_mechanism, dp_epsilon, dp_delta, dp_beta, seed};
  RETURN_IF_ERROR(o.fairness.Validate(num_classes));
  RETURN_IF_ERROR(o.Validate());
  return o;
}

SyntheticConfig RunConfig::ToSyntheticConfig() const {
  SyntheticConfig s = synthetic;
  s.seed = seed;
  return s;
}

absl::StatusOr<RunConfig> RunConfigFromJson(const json& j) {
  RunConfig c;
  RETURN_IF_ERROR(CheckKeys(j,
                            {"seed", "alpha", "fairness", "score", "estimator",
                             "quantile", "optimizer", "protocol", "dp",
                             "paths", "synthetic"},
                            "config"));
  RETURN_IF_ERROR(Get(j, "seed", &c.seed));
  RETURN_IF_ERROR(Get(j, "alpha", &c.alpha));

  if (auto it = j.find("fairness"); it != j.end()) {
    const json& f = *it;
    RETURN_IF_ERROR(
        CheckKeys(f, {"metric", "positive_labels", "closeness"}, "fairness"));
    RETURN_IF_ERROR(GetEnum(f, "metric", ParseMetric, &c.metric));
    RETURN_IF_ERROR(Get(f, "positive_labels", &c.positive_labels));
    RETURN_IF_ERROR(Get(f, "closeness", &c.closeness));
  }
  if (auto it = j.find("score"); it != j.end()) {
    const json& s = *it;
    RETURN_IF_ERROR(
        CheckKeys(s, {"kind", "nu", "k_reg", "delta", "daps_base"}, "score"));
    RETURN_IF_ERROR(GetEnum(s, "kind", ParseScoreKind, &c.score.kind));
    RETURN_IF_ERROR(Get(s, "nu", &c.score.nu));
    RETURN_IF_ERROR(Get(s, "k_reg", &c.score.k_reg));
    RETURN_IF_ERROR(Get(s, "delta", &c.score.diffusion));
    RETURN_IF_ERROR(
        GetEnum(s, "daps_base", ParseScoreKind, &c.score.daps_base));
  }
  if (auto it = j.find("estimator"); it != j.end()) {
    const json& e = *it;
    RETURN_IF_ERROR(
        CheckKeys(e, {"kind", "tightened_lower", "wilson_z"}, "estimator"));
    RETURN_IF_ERROR(GetEnum(e, "kind", ParseEstimator, &c.estimator));
    RETURN_IF_ERROR(Get(e, "tightened_lower", &c.tightened_lower));
    RETURN_IF_ERROR(Get(e, "wilson_z", &c.wilson_z));
  }
  if (auto it = j.find("quantile"); it != j.end()) {
    const json& q = *it;
    RETURN_IF_ERROR(CheckKeys(q, {"mode", "compression"}, "quantile"));
    std::string mode = "exact";
    RETURN_IF_ERROR(Get(q, "mode", &mode));
    if (mode != "exact" && mode != "sketch") {
      return absl::InvalidArgumentError(
          fmt::format("unknown quantile mode '{}'", mode));
    }
    c.use_sketch = mode == "sketch";
    RETURN_IF_ERROR(Get(q, "compression", &c.compression));
  }
  if (auto it = j.find("optimizer"); it != j.end()) {
    const json& o = *it;
    RETURN_IF_ERROR(CheckKeys(o, {"rounds", "eta", "mu"}, "optimizer"));
    RETURN_IF_ERROR(Get(o, "rounds", &c.rounds));
    if (auto e = o.find("eta"); e != o.end() && !e->is_null()) {
      double eta = 0.0;
      RETURN_IF_ERROR(Get(o, "eta", &eta));
      c.eta = eta;
    }
    RETURN_IF_ERROR(Get(o, "mu", &c.mu));
  }
  if (auto it = j.find("protocol"); it != j.end()) {
    const json& p = *it;
    RETURN_IF_ERROR(CheckKeys(p, {"default", "overrides"}, "protocol"));
    RETURN_IF_ERROR(GetEnum(p, "default", ParseProtocol, &c.protocol));
    if (auto o = p.find("overrides"); o != p.end()) {
      if (!o->is_object()) {
        return absl::InvalidArgumentError("protocol.overrides must be an object");
      }
      for (const auto& [key, value] : o->items()) {
        ClientId id = 0;
        auto [end, ec] =
            std::from_chars(key.data(), key.data() + key.size(), id);
        if (ec != std::errc() || end != key.data() + key.size()) {
          return absl::InvalidArgumentError(
              fmt::format("bad client id '{}' in protocol.overrides", key));
        }
        if (!value.is_string()) {
          return absl::InvalidArgumentError("protocol override must be a name");
        }
        absl::StatusOr<Protocol> proto =
            ParseProtocol(value.get<std::string>());
        if (!proto.ok()) return proto.status();
        c.protocol_overrides[id] = *proto;
      }
    }
  }
  if (auto it = j.find("dp"); it != j.end()) {
    const json& d = *it;
    RETURN_IF_ERROR(
        CheckKeys(d, {"mechanism", "epsilon", "delta", "beta"}, "dp"));
    RETURN_IF_ERROR(GetEnum(d, "mechanism", ParseMechanism, &c.dp_mechanism));
    RETURN_IF_ERROR(Get(d, "epsilon", &c.dp_epsilon));
    RETURN_IF_ERROR(Get(d, "delta", &c.dp_delta));
    RETURN_IF_ERROR(Get(d, "beta", &c.dp_beta));
  }
  if (auto it = j.find("paths"); it != j.end()) {
    RETURN_IF_ERROR(CheckKeys(*it, {"data"}, "paths"));
    RETURN_IF_ERROR(Get(*it, "data", &c.data_path));
  }
  if (auto it = j.find("synthetic"); it != j.end()) {
    const json& s = *it;
    SyntheticConfig& g = c.synthetic;
    RETURN_IF_ERROR(CheckKeys(
        s,
        {"clients", "classes", "groups", "examples_per_client",
         "group_proportions", "group_bias", "model_accuracy", "group_accuracy",
         "margin", "jitter", "temperature", "concentration", "iid", "split",
         "graph_degree", "homophily"},
        "synthetic"));
    RETURN_IF_ERROR(Get(s, "clients", &g.num_clients));
    RETURN_IF_ERROR(Get(s, "classes", &g.num_classes));
    RETURN_IF_ERROR(Get(s, "groups", &g.num_groups));
    RETURN_IF_ERROR(Get(s, "examples_per_client", &g.examples_per_client));
    RETURN_IF_ERROR(Get(s, "group_proportions", &g.group_proportions));
    RETURN_IF_ERROR(Get(s, "group_bias", &g.group_bias));
    RETURN_IF_ERROR(Get(s, "model_accuracy", &g.model_accuracy));
    RETURN_IF_ERROR(Get(s, "group_accuracy", &g.group_accuracy));
    RETURN_IF_ERROR(Get(s, "margin", &g.margin));
    RETURN_IF_ERROR(Get(s, "jitter", &g.jitter));
    RETURN_IF_ERROR(Get(s, "temperature", &g.temperature));
    RETURN_IF_ERROR(Get(s, "concentration", &g.concentration));
    RETURN_IF_ERROR(Get(s, "iid", &g.iid));
    RETURN_IF_ERROR(Get(s, "split", &g.split));
    RETURN_IF_ERROR(Get(s, "graph_degree", &g.graph_degree));
    RETURN_IF_ERROR(Get(s, "homophily", &g.homophily));
  }
  return c;
}

absl::StatusOr<RunConfig> LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::InvalidArgumentError(fmt::format("cannot open {}", path));
  }
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(fmt::format("malformed JSON in {}", path));
  }
  return RunConfigFromJson(j);
}

json RunConfigToJson(const RunConfig& c) {
  json overrides = json::object();
  for (const auto& [id, p] : c.protocol_overrides) {
    overrides[std::to_string(id)] = ProtocolName(p);
  }
  const SyntheticConfig& g = c.synthetic;
  return {
      {"seed", c.seed},
      {"alpha", c.alpha},
      {"fairness",
       {{"metric", MetricName(c.metric)},
        {"positive_labels", c.positive_labels},
        {"closeness", c.closeness}}},
      {"score",
       {{"kind", ScoreKindName(c.score.kind)},
        {"nu", c.score.nu},
        {"k_reg", c.score.k_reg},
        {"delta", c.score.diffusion},
        {"daps_base", ScoreKindName(c.score.daps_base)}}},
      {"estimator",
       {{"kind", EstimatorName(c.estimator)},
        {"tightened_lower", c.tightened_lower},
        {"wilson_z", c.wilson_z}}},
      {"quantile",
       {{"mode", c.use_sketch ? "sketch" : "exact"},
        {"compression", c.compression}}},
      {"optimizer",
       {{"rounds", c.rounds},
        {"eta", c.eta.has_value() ? json(*c.eta) : json(nullptr)},
        {"mu", c.mu}}},
      {"protocol",
       {{"default", ProtocolName(c.protocol)}, {"overrides", overrides}}},
      {"dp",
       {{"mechanism", MechanismName(c.dp_mechanism)},
        {"epsilon", c.dp_epsilon},
        {"delta", c.dp_delta},
        {"beta", c.dp_beta}}},
      {"paths", {{"data", c.data_path}}},
      {"synthetic",
       {{"clients", g.num_clients},
        {"classes", g.num_classes},
        {"groups", g.num_groups},
        {"examples_per_client", g.examples_per_client},
        {"group_proportions", g.group_proportions},
        {"group_bias", g.group_bias},
        {"model_accuracy", g.model_accuracy},
        {"group_accuracy", g.group_accuracy},
        {"margin", g.margin},
        {"jitter", g.jitter},
        {"temperature", g.temperature},
        {"concentration", g.concentration},
        {"iid", g.iid},
        {"split", g.split},
        {"graph_degree", g.graph_degree},
        {"homophily", g.homophily}}},
  };
}

std::string ConfigDigest(const RunConfig& config) {
  const std::string text = RunConfigToJson(config).dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace fedfair::cli
