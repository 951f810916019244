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
#include "cli.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedfair/data_io.h"
#include "fedfair/evaluation.h"
#include "fedfair/federation.h"
#include "fmt/format.h"
#include "json.hpp"
#include "run_config.h"

namespace fedfair::cli {
namespace {

using nlohmann::json;

// A status plus the exit code it maps to.
struct Failure {
  int code;
  std::string message;
};

Failure Usage(std::string message) { return {kExitUsage, std::move(message)}; }
Failure Runtime(const absl::Status& s) {
  return {kExitFailure, std::string(s.message())};
}

struct GlobalFlags {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_path;
  bool force = false;
};

// Flags that override RunConfig fields.
struct Overrides {
  std::optional<std::string> data;
  std::optional<double> alpha;
  std::optional<std::string> metric;
  std::vector<Label> positive_labels;
  std::optional<double> closeness;
  std::optional<std::string> score;
  std::optional<std::string> estimator;
  std::optional<bool> tightened_lower;
  std::optional<std::string> quantile;
  std::optional<uint32_t> compression;
  std::optional<uint32_t> rounds;
  std::optional<double> eta;
  std::optional<double> mu;
  std::optional<std::string> protocol;
  std::vector<ClientId> ep_clients;
  std::optional<std::string> dp;
  std::optional<double> epsilon;
  std::optional<double> dp_delta;
  std::optional<double> beta;
  // gen only
  std::optional<uint32_t> clients;
  std::optional<uint32_t> classes;
  std::optional<uint32_t> groups;
  std::optional<uint32_t> examples;
  std::optional<bool> iid;
  std::optional<double> accuracy;
  std::optional<double> concentration;
  std::optional<uint32_t> graph_degree;
};

template <typename T, typename Parse>
std::optional<Failure> ApplyEnum(const std::optional<std::string>& flag,
                                 Parse parse, T* out) {
  if (!flag.has_value()) return std::nullopt;
  absl::StatusOr<T> v = parse(*flag);
  if (!v.ok()) return Usage(std::string(v.status().message()));
  *out = *v;
  return std::nullopt;
}

template <typename T>
void Apply(const std::optional<T>& flag, T* out) {
  if (flag.has_value()) *out = *flag;
}

std::optional<Failure> ApplyOverrides(const Overrides& o, RunConfig* c) {
  Apply(o.data, &c->data_path);
  Apply(o.alpha, &c->alpha);
  if (auto f = ApplyEnum(o.metric, ParseMetric, &c->metric)) return f;
  if (!o.positive_labels.empty()) c->positive_labels = o.positive_labels;
  Apply(o.closeness, &c->closeness);
  if (auto f = ApplyEnum(o.score, ParseScoreKind, &c->score.kind)) return f;
  if (auto f = ApplyEnum(o.estimator, ParseEstimator, &c->estimator)) return f;
  Apply(o.tightened_lower, &c->tightened_lower);
  if (o.quantile.has_value()) {
    if (*o.quantile != "exact" && *o.quantile != "sketch") {
      return Usage(fmt::format("unknown quantile mode '{}'", *o.quantile));
    }
    c->use_sketch = *o.quantile == "sketch";
  }
  Apply(o.compression, &c->compression);
  Apply(o.rounds, &c->rounds);
  if (o.eta.has_value()) c->eta = o.eta;
  Apply(o.mu, &c->mu);
  if (auto f = ApplyEnum(o.protocol, ParseProtocol, &c->protocol)) return f;
  for (ClientId id : o.ep_clients) {
    c->protocol_overrides[id] = Protocol::kEnhancedPrivacy;
  }
  if (auto f = ApplyEnum(o.dp, ParseMechanism, &c->dp_mechanism)) return f;
  Apply(o.epsilon, &c->dp_epsilon);
  Apply(o.dp_delta, &c->dp_delta);
  Apply(o.beta, &c->dp_beta);
  SyntheticConfig& s = c->synthetic;
  Apply(o.clients, &s.num_clients);
  Apply(o.classes, &s.num_classes);
  Apply(o.groups, &s.num_groups);
  Apply(o.examples, &s.examples_per_client);
  Apply(o.iid, &s.iid);
  Apply(o.accuracy, &s.model_accuracy);
  Apply(o.concentration, &s.concentration);
  Apply(o.graph_degree, &s.graph_degree);
  return std::nullopt;
}

void AddRunFlags(CLI::App& app, Overrides& o) {
  app.add_option("--data", o.data, "Federation CSV");
  app.add_option("--alpha", o.alpha, "Miscoverage level");
  app.add_option("--metric", o.metric,
                 "demographic_parity, equal_opportunity or "
                 "predictive_equality");
  app.add_option("--positive-labels", o.positive_labels,
                 "Comma-separated positive labels")
      ->delimiter(',');
  app.add_option("--closeness", o.closeness, "Allowed coverage gap c");
  app.add_option("--score", o.score, "aps, raps or daps");
  app.add_option("--estimator", o.estimator, "interval, mle or wilson");
  app.add_option("--tightened-lower", o.tightened_lower,
                 "Use the tighter interval lower bound");
  app.add_option("--quantile", o.quantile, "exact or sketch");
  app.add_option("--compression", o.compression, "Sketch compression");
  app.add_option("--rounds", o.rounds, "Optimizer rounds");
  app.add_option("--eta", o.eta, "Initial step size");
  app.add_option("--mu", o.mu, "Momentum");
  app.add_option("--protocol", o.protocol,
                 "comm_efficient or enhanced_privacy");
  app.add_option("--ep-clients", o.ep_clients,
                 "Clients using the enhanced-privacy protocol")
      ->delimiter(',');
  app.add_option("--dp", o.dp, "none, gaussian or exponential");
  app.add_option("--epsilon", o.epsilon, "DP epsilon");
  app.add_option("--dp-delta", o.dp_delta, "DP delta (gaussian)");
  app.add_option("--beta", o.beta, "PAC acceptance level");
}

json PriorsJson(const PriorEstimates& p) {
  json labels = json::array();
  for (size_t j = 0; j < p.positive_labels.size(); ++j) {
    json groups = json::array();
    for (GroupId g = 0; g < p.num_groups; ++g) {
      groups.push_back({{"group", g},
                        {"lower", p.L(g, j)},
                        {"upper", p.U(g, j)},
                        {"point", p.pi(g, j)},
                        {"degenerate", p.is_degenerate(g, j)}});
    }
    labels.push_back(
        {{"positive_label", p.positive_labels[j]}, {"groups", groups}});
  }
  return labels;
}

json TraceJson(const OptimizerTrace& t) {
  json rounds = json::array();
  for (const TraceEntry& e : t.rounds) {
    rounds.push_back({{"round", e.round},
                      {"lambda", e.lambda},
                      {"cg", e.cg},
                      {"variance", e.variance},
                      {"accepted", e.accepted},
                      {"momentum", e.momentum},
                      {"p", e.p},
                      {"eta", e.eta}});
  }
  return rounds;
}

json EvalJson(const EvalReport& r) {
  json conditional = json::array();
  for (const ConditionalCoverage& c : r.conditional) {
    conditional.push_back({{"group", c.group},
                           {"positive_label", c.positive_label},
                           {"support", c.support},
                           {"coverage", c.coverage}});
  }
  return {{"lambda", r.lambda},           {"num_test", r.num_test},
          {"coverage", r.coverage},       {"efficiency", r.efficiency},
          {"disparity", r.disparity},     {"conditional", conditional},
          {"warnings", r.warnings}};
}

json BytesJson(const std::map<ClientId, uint64_t>& bytes) {
  json out = json::object();
  for (const auto& [id, n] : bytes) out[std::to_string(id)] = n;
  return out;
}

json GapJson(const GapEvaluation& gap) {
  json labels = json::array();
  for (const CoverageGapResult& r : gap.per_label) {
    labels.push_back({{"positive_label", r.positive_label},
                      {"cg", r.cg},
                      {"raw_cg", r.raw_cg},
                      {"clamped", r.clamped},
                      {"variance", r.variance},
                      {"excluded_groups", r.excluded_groups}});
  }
  return labels;
}

// Refuses to replace an existing file unless `force` is set.
std::optional<Failure> CheckWritable(const std::string& path, bool force) {
  if (!force && std::filesystem::exists(path)) {
    return Usage(fmt::format("{} exists; pass --force to overwrite", path));
  }
  return std::nullopt;
}

std::optional<Failure> Emit(const json& report, const GlobalFlags& g,
                            std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (g.out_path.empty()) {
    out << text;
    return std::nullopt;
  }
  if (auto f = CheckWritable(g.out_path, g.force)) return f;
  std::ofstream file(g.out_path, std::ios::trunc);
  file << text;
  if (!file) {
    return Runtime(absl::DataLossError(fmt::format("cannot write {}", g.out_path)));
  }
  return std::nullopt;
}

json ReportHeader(const RunConfig& config, std::string_view command) {
  return {{"schema_version", kSchemaVersion},
          {"config_digest", ConfigDigest(config)},
          {"command", command}};
}

// Loaded data plus a run built on it. The run points into `federation`, so
// the pair is heap-allocated and never moved.
struct Session {
  Federation federation;
  std::optional<FederatedRun> run;
};

std::optional<Failure> OpenSession(const RunConfig& config, Session* session) {
  if (config.data_path.empty()) {
    return Usage("no data file; pass --data or set paths.data");
  }
  absl::StatusOr<Federation> fed = LoadFederation(config.data_path);
  if (!fed.ok()) return Runtime(fed.status());
  session->federation = *std::move(fed);
  absl::StatusOr<RunOptions> options = config.ToRunOptions(
      session->federation.num_classes, session->federation.num_groups);
  if (!options.ok()) return Usage(std::string(options.status().message()));
  absl::StatusOr<FederatedRun> run =
      FederatedRun::Create(session->federation, *options);
  if (!run.ok()) return Runtime(run.status());
  session->run.emplace(*std::move(run));
  return std::nullopt;
}

std::optional<Failure> CmdGen(const RunConfig& config, const GlobalFlags& g,
                              std::ostream& out) {
  SyntheticConfig synth = config.ToSyntheticConfig();
  if (absl::Status s = synth.Validate(); !s.ok()) {
    return Usage(std::string(s.message()));
  }
  absl::StatusOr<Federation> fed = GenerateSynthetic(synth);
  if (!fed.ok()) return Runtime(fed.status());
  if (g.out_path.empty()) {
    if (absl::Status s = WriteFederationCsv(*fed, out); !s.ok()) {
      return Runtime(s);
    }
    return std::nullopt;
  }
  if (auto f = CheckWritable(g.out_path, g.force)) return f;
  if (auto f = CheckWritable(MetadataPath(g.out_path), g.force)) return f;
  if (absl::Status s = SaveFederation(*fed, g.out_path); !s.ok()) {
    return Runtime(s);
  }
  return std::nullopt;
}

std::optional<Failure> CmdCalibrate(const RunConfig& config,
                                    const GlobalFlags& g, std::ostream& out) {
  auto session = std::make_unique<Session>();
  if (auto f = OpenSession(config, session.get())) return f;
  FederatedRun& run = *session->run;
  std::vector<ClientId> all = run.AllClients();
  absl::StatusOr<FcpQuantileResult> cal = run.Calibrate(all);
  if (!cal.ok()) return Runtime(cal.status());
  absl::StatusOr<EvalReport> eval =
      EvaluateFederation(session->federation, run.scores(), cal->lambda,
                         run.options().fairness);
  if (!eval.ok()) return Runtime(eval.status());
  json report = ReportHeader(config, "calibrate");
  report["lambda_0"] = cal->lambda;
  report["N"] = cal->num_scores;
  report["K"] = cal->num_clients;
  report["rank"] = cal->rank;
  report["alpha"] = config.alpha;
  report["vacuous"] = cal->vacuous;
  report["from_sketch"] = cal->from_sketch;
  report["guarantee"] = {cal->coverage_lower, cal->coverage_upper};
  report["eval"] = EvalJson(*eval);
  return Emit(report, g, out);
}

std::optional<Failure> CmdOptimize(const RunConfig& config,
                                   const GlobalFlags& g, std::ostream& out) {
  auto session = std::make_unique<Session>();
  if (auto f = OpenSession(config, session.get())) return f;
  FederatedRun& run = *session->run;
  absl::StatusOr<RunReport> rr = run.RunFairOpt();
  if (!rr.ok()) return Runtime(rr.status());
  const FairnessSpec& spec = run.options().fairness;
  absl::StatusOr<EvalReport> base = EvaluateFederation(
      session->federation, run.scores(), rr->trace.lambda_0, spec);
  if (!base.ok()) return Runtime(base.status());
  absl::StatusOr<EvalReport> fair = EvaluateFederation(
      session->federation, run.scores(), rr->trace.lambda_opt, spec);
  if (!fair.ok()) return Runtime(fair.status());

  json report = ReportHeader(config, "optimize");
  report["lambda_0"] = rr->trace.lambda_0;
  report["lambda_opt"] = rr->trace.lambda_opt;
  report["lambda_max"] = rr->lambda_max;
  report["feasible"] = rr->trace.feasible;
  report["early_exit"] = rr->trace.early_exit;
  report["final_cg"] = rr->trace.final_sample.gap;
  report["trace"] = TraceJson(rr->trace);
  report["priors"] = PriorsJson(rr->priors);
  report["eval"] = {{"base", EvalJson(*base)}, {"fair", EvalJson(*fair)}};
  report["bytes_by_client"] = BytesJson(rr->bytes_by_client);
  report["server_bytes"] = rr->server_bytes;
  report["messages"] = rr->messages;
  report["cg_rounds"] = rr->cg_rounds;
  report["privacy_spend"] = rr->privacy_spend;
  report["warnings"] = rr->warnings;
  return Emit(report, g, out);
}

std::optional<Failure> CmdAudit(const RunConfig& config, const GlobalFlags& g,
                                double lambda,
                                const std::vector<ClientId>& subset,
                                std::ostream& out) {
  auto session = std::make_unique<Session>();
  if (auto f = OpenSession(config, session.get())) return f;
  FederatedRun& run = *session->run;
  std::vector<ClientId> participants =
      subset.empty() ? run.AllClients() : subset;
  absl::StatusOr<AuditReport> audit = run.Audit(participants, lambda);
  if (!audit.ok()) return Runtime(audit.status());
  json report = ReportHeader(config, "audit");
  report["mode"] = AuditModeName(audit->mode);
  report["lambda"] = audit->lambda;
  report["participants"] = audit->participants;
  report["cg"] = audit->cg;
  report["pass"] = audit->pass;
  report["pac"] = audit->pac;
  report["closeness"] = config.closeness;
  report["per_label"] = GapJson(audit->gap);
  report["priors"] = PriorsJson(audit->priors);
  report["bytes_by_client"] = BytesJson(run.bytes_by_client());
  report["warnings"] = audit->warnings;
  return Emit(report, g, out);
}

std::optional<Failure> CmdEvaluate(const RunConfig& config,
                                   const GlobalFlags& g, double lambda,
                                   std::ostream& out) {
  auto session = std::make_unique<Session>();
  if (auto f = OpenSession(config, session.get())) return f;
  FederatedRun& run = *session->run;
  absl::StatusOr<EvalReport> eval = EvaluateFederation(
      session->federation, run.scores(), lambda, run.options().fairness);
  if (!eval.ok()) return Runtime(eval.status());
  json report = ReportHeader(config, "evaluate");
  report["eval"] = EvalJson(*eval);
  return Emit(report, g, out);
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Fairness-aware federated conformal prediction", "fedfair"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  Overrides o;
  app.add_option("--config", g.config_path, "JSON run config");
  app.add_option("--seed", g.seed, "Seed for data, scores and noise");
  app.add_option("--out", g.out_path, "Output file (default stdout)");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  AddRunFlags(app, o);

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic federation");
  gen->add_option("--clients", o.clients, "Number of clients");
  gen->add_option("--classes", o.classes, "Number of classes");
  gen->add_option("--groups", o.groups, "Number of groups");
  gen->add_option("--examples", o.examples, "Examples per client");
  gen->add_option("--iid", o.iid, "Equal shuffled partition");
  gen->add_option("--accuracy", o.accuracy, "Simulated model accuracy");
  gen->add_option("--concentration", o.concentration,
                  "Dirichlet concentration");
  gen->add_option("--graph-degree", o.graph_degree, "Neighbours per node");

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "Federated conformal threshold");
  CLI::App* optimize =
      app.add_subcommand("optimize", "Search for the smallest fair threshold");

  double lambda = 0.0;
  std::vector<ClientId> subset;
  CLI::App* audit = app.add_subcommand("audit", "Audit a fixed threshold");
  audit->add_option("--lambda", lambda, "Threshold to audit")->required();
  audit->add_option("--clients", subset, "Participating clients")
      ->delimiter(',');
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Test metrics at a threshold");
  evaluate->add_option("--lambda", lambda, "Threshold")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunConfig config;
  if (!g.config_path.empty()) {
    absl::StatusOr<RunConfig> loaded = LoadRunConfig(g.config_path);
    if (!loaded.ok()) {
      err << "error: " << loaded.status().message() << "\n";
      return kExitUsage;
    }
    config = *std::move(loaded);
  }
  std::optional<Failure> failure = ApplyOverrides(o, &config);
  if (g.seed.has_value()) config.seed = *g.seed;
  if (!failure.has_value()) {
    if (absl::Status s = config.Validate(); !s.ok()) {
      failure = Usage(std::string(s.message()));
    }
  }
  if (!failure.has_value()) {
    if (gen->parsed()) {
      failure = CmdGen(config, g, out);
    } else if (calibrate->parsed()) {
      failure = CmdCalibrate(config, g, out);
    } else if (optimize->parsed()) {
      failure = CmdOptimize(config, g, out);
    } else if (audit->parsed()) {
      failure = CmdAudit(config, g, lambda, subset, out);
    } else if (evaluate->parsed()) {
      failure = CmdEvaluate(config, g, lambda, out);
    }
  }
  if (failure.has_value()) {
    err << "error: " << failure->message << "\n";
    return failure->code;
  }
  return kExitOk;
}

}  // namespace fedfair::cli
