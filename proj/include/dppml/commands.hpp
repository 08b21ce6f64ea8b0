//
// Copyright 2026 The dppml Authors
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

// Subcommands of the dppml tool. Each command resolves a flat parameter
// table, writes it to `<command>.resolved.json` in the output directory and
// then produces its artifacts. Feeding the resolved file back through
// `--config` reproduces every artifact byte for byte.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.

#ifndef DPPML_COMMANDS_HPP_
#define DPPML_COMMANDS_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/config.hpp"
#include "dppml/dataio.hpp"
#include "dppml/dml.hpp"
#include "dppml/eval.hpp"
#include "dppml/kappa.hpp"
#include "dppml/mechanisms.hpp"
#include "dppml/pairgraph.hpp"

namespace dppml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Failures caused by the inputs or parameters map to kExitUsage; everything
// else happened while running and maps to kExitRuntime.
inline int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kMissingLabelColumn:
    case ErrorCode::kDuplicateEdge:
    case ErrorCode::kSelfLoop:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kUnknownNode:
    case ErrorCode::kInvalidGamma:
    case ErrorCode::kDeltaZero:
    case ErrorCode::kGraphTooLarge:
    case ErrorCode::kInfeasibleDensity:
    case ErrorCode::kInfeasibleBalance:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

inline const std::vector<std::string>& CommandNames() {
  static const std::vector<std::string> names = {
      "synth", "analyze-kappa", "train", "evaluate", "sweep", "compare-mechanisms"};
  return names;
}

namespace internal {

inline ParamSpec Input(std::string name, std::string help, bool required = true) {
  return {std::move(name), ParamType::kString, nullptr, std::move(help), required, true};
}

// Training parameters shared by train, sweep and compare-mechanisms.
inline std::vector<ParamSpec> TrainParams(const std::set<std::string>& exclude = {}) {
  const std::vector<ParamSpec> all = {
      {"d_prime", ParamType::kInt, 0, "projection rows (0: data dimension)"},
      {"margin", ParamType::kNumber, nullptr, "contrastive margin (unset: mean dissimilar distance)"},
      {"margin_ratio", ParamType::kNumber, 1.0, "scale of the derived margin"},
      {"lipschitz", ParamType::kNumber, 0.5, "gradient clipping bound h"},
      {"batch_size", ParamType::kInt, 30, "pairs per minibatch"},
      {"epochs", ParamType::kInt, 10, "passes over the pairs"},
      {"init_scale", ParamType::kNumber, 0.1, "uniform initialization half-width"},
      {"epsilon", ParamType::kNumber, 2.0, "total privacy budget (inf: no noise)"},
      {"delta", ParamType::kNumber, 0.0, "approximate-DP delta"},
      {"mechanism", ParamType::kString, "laplace", "none|laplace|gaussian|staircase|duchi"},
      {"staircase_gamma", ParamType::kNumber, nullptr, "stair ratio (unset: variance optimal)"},
      {"kappa", ParamType::kInt, nullptr, "privacy distance (unset: computed from the graph)"},
      {"kappa_method", ParamType::kString, "auto", "exact|upper|node-dp|auto"},
      {"exact_limit", ParamType::kInt, 64, "largest graph for the exhaustive kappa"},
      {"sensitivity", ParamType::kString, "reduced", "basic|reduced"},
      {"norm", ParamType::kString, "l1", "l1|l2"},
      {"batch_mode", ParamType::kString, "shuffled", "shuffled|component"},
      {"relation", ParamType::kString, "transitive", "transitive|intransitive"},
  };
  std::vector<ParamSpec> out;
  for (const ParamSpec& spec : all) {
    if (!exclude.contains(spec.name)) out.push_back(spec);
  }
  return out;
}

inline void SetDefault(std::vector<ParamSpec>& specs, const std::string& name,
                       Json value) {
  for (ParamSpec& spec : specs) {
    if (spec.name == name) spec.default_value = std::move(value);
  }
}

[[noreturn]] inline void BadChoice(const std::string& name, const std::string& value) {
  throw Error(ErrorCode::kConfigInvalid,
              "parameter '" + name + "': unknown value '" + value + "'");
}

inline NormMode ParseNorm(const std::string& v) {
  if (v == "l1") return NormMode::kL1;
  if (v == "l2") return NormMode::kL2;
  BadChoice("norm", v);
}

inline SensitivityMode ParseSensitivity(const std::string& v) {
  if (v == "basic") return SensitivityMode::kBasic;
  if (v == "reduced") return SensitivityMode::kReduced;
  BadChoice("sensitivity", v);
}

inline BatchMode ParseBatchMode(const std::string& v) {
  if (v == "shuffled") return BatchMode::kShuffled;
  if (v == "component") return BatchMode::kComponent;
  BadChoice("batch_mode", v);
}

inline RelationKind ParseRelation(const std::string& v) {
  if (v == "transitive") return RelationKind::kTransitive;
  if (v == "intransitive") return RelationKind::kIntransitive;
  BadChoice("relation", v);
}

inline KappaChoice ParseKappaChoice(const std::string& v) {
  if (v == "auto") return KappaChoice::kAuto;
  if (v == "exact") return KappaChoice::kExact;
  if (v == "upper") return KappaChoice::kUpper;
  if (v == "node-dp" || v == "node_dp") return KappaChoice::kNodeDp;
  BadChoice("kappa_method", v);
}

inline size_t Positive(const Params& p, const std::string& name) {
  const int64_t v = p.Int(name);
  if (v < 1) throw Error(ErrorCode::kConfigInvalid, name + " must be >= 1");
  return static_cast<size_t>(v);
}

inline size_t NonNegative(const Params& p, const std::string& name) {
  const int64_t v = p.Int(name);
  if (v < 0) throw Error(ErrorCode::kConfigInvalid, name + " must be >= 0");
  return static_cast<size_t>(v);
}

// Training configuration from the shared parameters; the kappa field is
// left for the caller.
inline TrainConfig MakeTrainConfig(const Params& p, uint64_t seed, size_t dimension) {
  TrainConfig c;
  const size_t d_prime = NonNegative(p, "d_prime");
  c.d_prime = d_prime == 0 ? dimension : d_prime;
  c.margin = p.OptionalNumber("margin");
  c.margin_ratio = p.Number("margin_ratio");
  c.lipschitz = p.Number("lipschitz");
  c.batch_size = Positive(p, "batch_size");
  c.budget.t_max = static_cast<int>(Positive(p, "epochs"));
  c.init_scale = p.Number("init_scale");
  if (p.json().contains("epsilon")) c.budget.epsilon = p.Number("epsilon");
  c.budget.delta = p.Number("delta");
  if (p.json().contains("mechanism")) c.mechanism = ParseMechanism(p.String("mechanism"));
  c.staircase_gamma = p.OptionalNumber("staircase_gamma");
  if (p.json().contains("sensitivity")) {
    c.sensitivity_mode = ParseSensitivity(p.String("sensitivity"));
  }
  c.norm_mode = ParseNorm(p.String("norm"));
  c.batch_mode = ParseBatchMode(p.String("batch_mode"));
  c.seed = seed;
  return c;
}

inline KappaOptions MakeKappaOptions(const Params& p) {
  KappaOptions options;
  options.exact_limit = static_cast<int>(NonNegative(p, "exact_limit"));
  return options;
}

// The given kappa, or the one computed from the graph.
inline KappaReport ResolveKappa(const Params& p, const PairGraph& graph) {
  if (auto given = p.OptionalInt("kappa")) {
    if (*given < 0) throw Error(ErrorCode::kConfigInvalid, "kappa must be >= 0");
    KappaReport report;
    report.kappa = static_cast<int>(*given);
    return report;
  }
  return ComputeKappa(graph, ParseKappaChoice(p.String("kappa_method")),
                      MakeKappaOptions(p));
}

inline std::string KappaSource(const Params& p, const KappaReport& report) {
  if (p.has("kappa")) return "given";
  return std::string(KappaMethodName(report.method));
}

inline Json KappaToJson(const KappaReport& report, const PairGraph& graph) {
  Json j = Json::object();
  j["kappa"] = report.kappa;
  j["method"] = KappaMethodName(report.method);
  j["nodes"] = graph.num_nodes();
  j["edges"] = graph.num_edges();
  if (report.witness_pair) {
    j["witness_pair"] = {report.witness_pair->first, report.witness_pair->second};
  }
  if (report.witness_node) j["witness_node"] = *report.witness_node;
  if (!report.per_pair_terms.empty()) {
    Json terms = Json::array();
    for (const PairTerm& t : report.per_pair_terms) {
      terms.push_back({{"s", t.s},
                       {"t", t.t},
                       {"paths", t.paths},
                       {"cycle_s", t.cycle_s},
                       {"cycle_t", t.cycle_t},
                       {"term", t.term}});
    }
    j["terms"] = std::move(terms);
  }
  return j;
}

inline std::string OutputPath(const std::string& out_dir, const std::string& name) {
  const std::filesystem::path path(name);
  if (path.is_absolute()) return path.string();
  return (std::filesystem::path(out_dir) / path).string();
}

inline void WriteTextFile(const std::string& path, const std::string& content) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << content;
  if (!out.flush()) throw Error(ErrorCode::kIo, "failed writing " + path);
}

inline char SingleChar(const Params& p, const std::string& name) {
  const std::string v = p.String(name);
  if (v.size() != 1) throw Error(ErrorCode::kConfigInvalid, name + " must be one character");
  return v[0];
}

}  // namespace internal

// Parameter table of a subcommand.
inline std::vector<ParamSpec> CommandParams(std::string_view command) {
  using internal::Input;
  if (command == "synth") {
    return {
        {"n_per_class", ParamType::kInt, 100, "individuals per class"},
        {"shape", ParamType::kString, "toy", "toy|benchmark class geometry"},
        {"pairs_mode", ParamType::kString, "toy", "toy (acyclic) | density"},
        {"density", ParamType::kNumber, 2.0, "edges per node in density mode"},
        {"pool_fraction", ParamType::kNumber, 1.0, "share of individuals eligible for pairs"},
        {"balance", ParamType::kBool, false, "alternate similar and dissimilar draws"},
        {"intra_per_class", ParamType::kInt, 50, "similar pairs per class in toy mode"},
        {"inter", ParamType::kInt, 50, "dissimilar pairs in toy mode"},
        {"norm", ParamType::kString, "l1", "l1|l2 normalization"},
        {"norm_scope", ParamType::kString, "global", "global|per_row"},
        {"samples_out", ParamType::kString, "samples.csv", "samples file"},
        {"pairs_out", ParamType::kString, "pairs.csv", "pairs file"},
    };
  }
  if (command == "analyze-kappa") {
    return {
        Input("pairs", "pairs CSV"),
        {"relation", ParamType::kString, "transitive", "transitive|intransitive"},
        {"method", ParamType::kString, "auto", "exact|upper|node-dp|auto"},
        {"exact_limit", ParamType::kInt, 64, "largest graph for the exhaustive kappa"},
        {"terms", ParamType::kBool, false, "include every pair term"},
        {"delimiter", ParamType::kString, ",", "field separator"},
        {"out", ParamType::kString, "kappa.json", "report file"},
    };
  }
  if (command == "train") {
    std::vector<ParamSpec> specs = {Input("pairs", "pairs CSV")};
    for (ParamSpec& s : internal::TrainParams()) specs.push_back(std::move(s));
    specs.push_back({"out", ParamType::kString, "model.json", "model file"});
    specs.push_back({"trace", ParamType::kString, "trace.csv", "trace CSV"});
    return specs;
  }
  if (command == "evaluate") {
    return {
        Input("model", "model JSON"),
        Input("data", "samples CSV"),
        Input("pairs", "pairs CSV; its individuals form the training set", false),
        {"k", ParamType::kInt, 5, "neighbours"},
        {"out", ParamType::kString, "evaluate.json", "report file"},
    };
  }
  if (command == "sweep") {
    std::vector<ParamSpec> specs = {Input("data", "samples CSV"),
                                    Input("pairs", "pairs CSV")};
    for (ParamSpec& s : internal::TrainParams({"epsilon", "kappa", "mechanism",
                                               "sensitivity"})) {
      specs.push_back(std::move(s));
    }
    specs.push_back({"methods", ParamType::kStringList,
                     Json::array({"nonpriv", "dpp", "dpp_s", "node_dp", "input_per"}),
                     "methods to compare"});
    specs.push_back({"epsilons", ParamType::kNumberList, Json::array({1, 2, 3, 4}),
                     "privacy budgets"});
    specs.push_back({"repeats", ParamType::kInt, 20, "runs per cell"});
    specs.push_back({"k", ParamType::kInt, 5, "neighbours"});
    specs.push_back({"threads", ParamType::kInt, 0, "workers (0: all cores)"});
    specs.push_back({"out", ParamType::kString, "sweep.csv", "per-run CSV"});
    specs.push_back({"summary", ParamType::kString, "sweep_summary.csv", "per-cell CSV"});
    return specs;
  }
  if (command == "compare-mechanisms") {
    std::vector<ParamSpec> specs = {Input("pairs", "pairs CSV")};
    for (ParamSpec& s : internal::TrainParams({"mechanism", "sensitivity"})) {
      specs.push_back(std::move(s));
    }
    internal::SetDefault(specs, "epochs", 1);
    specs.push_back({"mechanisms", ParamType::kStringList,
                     Json::array({"lap", "lap_s", "scdf", "duchi"}),
                     "mechanisms; a _s suffix selects the reduced sensitivity"});
    specs.push_back({"runs", ParamType::kInt, 10, "runs averaged per mechanism"});
    specs.push_back({"threads", ParamType::kInt, 0, "workers (0: all cores)"});
    specs.push_back({"out", ParamType::kString, "compare.csv", "objective CSV"});
    return specs;
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown command '" + std::string(command) + "'");
}

struct Invocation {
  std::string command;
  uint64_t seed = 1;
  std::string out_dir;  // absolute
  Json params;          // resolved table

  Json ToJson() const {
    Json j = Json::object();
    j["command"] = command;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    for (const auto& [key, value] : params.items()) j[key] = value;
    return j;
  }
};

// Flags override the config file, which overrides defaults. Input paths are
// made absolute and must exist.
inline Invocation ResolveInvocation(const std::string& command,
                                    const std::optional<std::string>& config_path,
                                    const std::map<std::string, std::string>& flags,
                                    const std::optional<std::string>& seed_flag,
                                    const std::optional<std::string>& out_dir_flag) {
  const std::vector<ParamSpec> specs = CommandParams(command);
  Json config = nullptr;
  if (config_path) config = LoadJsonFile(*config_path);
  Invocation inv;
  inv.command = command;
  if (config.is_object() && config.contains("command") &&
      config["command"] != Json(command)) {
    throw Error(ErrorCode::kConfigInvalid,
                "config was written for '" + config["command"].dump() + "'");
  }
  if (seed_flag) {
    const auto parsed = dppml::internal::ParseU64(*seed_flag);
    if (!parsed) throw Error(ErrorCode::kConfigInvalid, "seed must be an unsigned integer");
    inv.seed = *parsed;
  } else if (config.is_object() && config.contains("seed")) {
    if (!config["seed"].is_number_unsigned()) {
      throw Error(ErrorCode::kConfigInvalid, "seed must be an unsigned integer");
    }
    inv.seed = config["seed"].get<uint64_t>();
  }
  std::string out_dir = ".";
  if (out_dir_flag) {
    out_dir = *out_dir_flag;
  } else if (config.is_object() && config.contains("out_dir")) {
    if (!config["out_dir"].is_string()) {
      throw Error(ErrorCode::kConfigInvalid, "out_dir must be a string");
    }
    out_dir = config["out_dir"].get<std::string>();
  }
  inv.out_dir = std::filesystem::absolute(out_dir).lexically_normal().string();
  inv.params = ResolveParams(specs, config, flags);
  for (const ParamSpec& spec : specs) {
    if (!spec.input_path || inv.params[spec.name].is_null()) continue;
    const std::string path = inv.params[spec.name].get<std::string>();
    if (!std::filesystem::is_regular_file(path)) {
      throw Error(ErrorCode::kConfigInvalid,
                  "parameter '" + spec.name + "': no such file " + path);
    }
    inv.params[spec.name] = std::filesystem::absolute(path).lexically_normal().string();
  }
  return inv;
}

inline int CmdSynth(const Invocation& inv, const Params& p, std::ostream& out) {
  using namespace internal;
  const std::string shape_name = p.String("shape");
  StripShape shape;
  if (shape_name == "toy") {
    shape = kToyStrips;
  } else if (shape_name == "benchmark") {
    shape = kBenchmarkStrips;
  } else {
    BadChoice("shape", shape_name);
  }
  const std::string scope_name = p.String("norm_scope");
  NormalizeScope scope = NormalizeScope::kGlobal;
  if (scope_name == "per_row") {
    scope = NormalizeScope::kPerRow;
  } else if (scope_name != "global") {
    BadChoice("norm_scope", scope_name);
  }
  const SampleSet samples =
      Normalize(SynthTwoGaussians(Positive(p, "n_per_class"), inv.seed, shape),
                ParseNorm(p.String("norm")), scope);
  const std::string mode = p.String("pairs_mode");
  std::vector<PairwiseDatum> pairs;
  if (mode == "toy") {
    pairs = SampleToyPairs(samples, NonNegative(p, "intra_per_class"),
                           NonNegative(p, "inter"), inv.seed);
  } else if (mode == "density") {
    pairs = SamplePairsFromPool(samples, p.Number("density"), p.Number("pool_fraction"),
                                p.Bool("balance"), inv.seed);
  } else {
    BadChoice("pairs_mode", mode);
  }
  std::ostringstream samples_csv;
  WriteSamplesCsv(samples_csv, samples);
  std::ostringstream pairs_csv;
  WritePairsCsv(pairs_csv, pairs);
  WriteTextFile(OutputPath(inv.out_dir, p.String("samples_out")), samples_csv.str());
  WriteTextFile(OutputPath(inv.out_dir, p.String("pairs_out")), pairs_csv.str());
  const PairGraph graph = PairGraph::Build(pairs);
  Json summary = {{"samples", samples.size()},
                  {"dimension", samples.dimension()},
                  {"pairs", pairs.size()},
                  {"nodes", graph.num_nodes()}};
  out << summary.dump() << '\n';
  return kExitOk;
}

inline int CmdAnalyzeKappa(const Invocation& inv, const Params& p, std::ostream& out) {
  using namespace internal;
  const auto pairs = LoadPairsCsv(p.String("pairs"), SingleChar(p, "delimiter"));
  const PairGraph graph = PairGraph::Build(pairs, ParseRelation(p.String("relation")));
  KappaOptions options = MakeKappaOptions(p);
  options.collect_terms = p.Bool("terms");
  const KappaReport report =
      ComputeKappa(graph, ParseKappaChoice(p.String("method")), options);
  const Json j = KappaToJson(report, graph);
  WriteTextFile(OutputPath(inv.out_dir, p.String("out")), j.dump(2) + "\n");
  out << j.dump() << '\n';
  return kExitOk;
}

inline Json ModelToJson(const MetricModel& model) {
  return {{"d_prime", model.d_prime()}, {"d", model.d()}, {"w", model.w.data}};
}

inline MetricModel LoadModelJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  try {
    const size_t rows = j.at("d_prime").get<size_t>();
    const size_t cols = j.at("d").get<size_t>();
    std::vector<double> data = j.at("w").get<std::vector<double>>();
    if (rows == 0 || cols == 0 || data.size() != rows * cols) {
      throw Error(ErrorCode::kParseError, path + ": W does not have d_prime x d entries");
    }
    MetricModel model;
    model.w = Matrix(rows, cols);
    model.w.data = std::move(data);
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

inline std::string TraceToCsv(const TrainTrace& trace) {
  std::ostringstream csv;
  csv << "iter,epoch,objective,eta,sens_basic,sens_reduced_min,sens_reduced_max\n";
  for (const TraceRow& r : trace.rows) {
    csv << r.iter << ',' << r.epoch << ',' << FormatDouble(r.objective) << ','
        << FormatDouble(r.eta) << ',' << FormatDouble(r.sens_basic) << ','
        << FormatDouble(r.sens_reduced_min) << ',' << FormatDouble(r.sens_reduced_max)
        << '\n';
  }
  return csv.str();
}

inline std::vector<PairwiseDatum> LoadNonEmptyPairs(const std::string& path) {
  auto pairs = LoadPairsCsv(path);
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, path + " holds no pairs");
  if (pairs.front().delta_x.empty()) {
    throw Error(ErrorCode::kInvalidArgument, path + " holds no feature differences");
  }
  return pairs;
}

inline int CmdTrain(const Invocation& inv, const Params& p, std::ostream& out) {
  using namespace internal;
  const auto pairs = LoadNonEmptyPairs(p.String("pairs"));
  const PairGraph graph = PairGraph::Build(pairs, ParseRelation(p.String("relation")));
  TrainConfig config = MakeTrainConfig(p, inv.seed, graph.dimension());
  const KappaReport kappa = ResolveKappa(p, graph);
  config.budget.kappa = kappa.kappa;
  const TrainResult result = Train(pairs, graph, config);

  Json model = ModelToJson(result.model);
  model["margin"] = result.trace.margin;
  model["kappa"] = kappa.kappa;
  WriteTextFile(OutputPath(inv.out_dir, p.String("out")), model.dump(2) + "\n");
  WriteTextFile(OutputPath(inv.out_dir, p.String("trace")), TraceToCsv(result.trace));

  const TraceRow& first = result.trace.rows.front();
  const TraceRow& last = result.trace.rows.back();
  Json summary = {{"kappa", kappa.kappa},
                  {"kappa_method", KappaSource(p, kappa)},
                  {"margin", result.trace.margin},
                  {"iterations", last.iter},
                  {"initial_objective", first.objective},
                  {"final_objective", last.objective},
                  {"degenerate_events", result.trace.degenerate_events}};
  out << summary.dump() << '\n';
  return kExitOk;
}

inline int CmdEvaluate(const Invocation& inv, const Params& p, std::ostream& out) {
  using namespace internal;
  const MetricModel model = LoadModelJson(p.String("model"));
  const SampleSet samples = LoadSamplesCsv(p.String("data"));
  if (samples.dimension() != model.d()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model expects " + std::to_string(model.d()) + " features, data has " +
                    std::to_string(samples.dimension()));
  }
  const size_t k = Positive(p, "k");
  Json report = Json::object();
  if (p.has("pairs")) {
    const PairSplit split = SplitByPairs(samples, LoadPairsCsv(p.String("pairs")));
    const SampleSet train = samples.Subset(split.train);
    const SampleSet test = samples.Subset(split.test);
    report["protocol"] = "pair_split";
    report["train_size"] = train.size();
    report["test_size"] = test.size();
    report["accuracy"] = KnnAccuracy(model, train.x, train.labels, test.x, test.labels, k);
    report["raw_accuracy"] =
        KnnAccuracyInSpace(train.x, train.labels, test.x, test.labels, k);
  } else {
    report["protocol"] = "leave_one_out";
    report["train_size"] = samples.size();
    report["test_size"] = samples.size();
    report["accuracy"] = KnnLeaveOneOutInSpace(Project(model, samples.x), samples.labels, k);
    report["raw_accuracy"] = KnnLeaveOneOutInSpace(samples.x, samples.labels, k);
  }
  report["k"] = k;
  WriteTextFile(OutputPath(inv.out_dir, p.String("out")), report.dump(2) + "\n");
  out << report.dump() << '\n';
  return kExitOk;
}

inline int CmdSweep(const Invocation& inv, const Params& p, std::ostream& out) {
  using namespace internal;
  const SampleSet samples = LoadSamplesCsv(p.String("data"));
  const Benchmark bench = MakeBenchmark(samples, LoadNonEmptyPairs(p.String("pairs")),
                                        ParseRelation(p.String("relation")));
  ExperimentOptions options;
  for (const std::string& name : p.StringList("methods")) {
    options.methods.push_back(ParseMethod(name));
  }
  options.epsilons = p.NumberList("epsilons");
  options.repeats = Positive(p, "repeats");
  options.base = MakeTrainConfig(p, inv.seed, bench.graph.dimension());
  options.k = Positive(p, "k");
  options.kappa_choice = ParseKappaChoice(p.String("kappa_method"));
  options.kappa_options = MakeKappaOptions(p);
  options.threads = NonNegative(p, "threads");
  const auto reports = RunExperiment(bench, options);

  std::ostringstream runs;
  std::ostringstream cells;
  runs << "method,epsilon,run,accuracy\n";
  cells << "method,epsilon,runs,mean,std\n";
  for (const ExperimentReport& r : reports) {
    const std::string method(MethodName(r.method));
    const std::string eps = FormatDouble(r.epsilon);
    for (size_t run = 0; run < r.per_run.size(); ++run) {
      runs << method << ',' << eps << ',' << run << ',' << FormatDouble(r.per_run[run])
           << '\n';
    }
    cells << method << ',' << eps << ',' << r.runs << ',' << FormatDouble(r.mean_accuracy)
          << ',' << FormatDouble(r.std_accuracy) << '\n';
  }
  WriteTextFile(OutputPath(inv.out_dir, p.String("out")), runs.str());
  WriteTextFile(OutputPath(inv.out_dir, p.String("summary")), cells.str());
  out << cells.str();
  return kExitOk;
}

// A compare-mechanisms entry: mechanism name with an optional "_s" suffix
// for the reduced sensitivity.
inline std::pair<Mechanism, SensitivityMode> ParseMechanismVariant(
    const std::string& name) {
  std::string_view stem = name;
  SensitivityMode mode = SensitivityMode::kBasic;
  if (stem.ends_with("_s")) {
    stem.remove_suffix(2);
    mode = SensitivityMode::kReduced;
  }
  return {ParseMechanism(stem), mode};
}

inline int CmdCompareMechanisms(const Invocation& inv, const Params& p,
                                std::ostream& out) {
  using namespace internal;
  const auto pairs = LoadNonEmptyPairs(p.String("pairs"));
  const PairGraph graph = PairGraph::Build(pairs, ParseRelation(p.String("relation")));
  TrainConfig base = MakeTrainConfig(p, inv.seed, graph.dimension());
  base.budget.kappa = ResolveKappa(p, graph).kappa;
  const std::vector<std::string> names = p.StringList("mechanisms");
  if (names.empty()) throw Error(ErrorCode::kConfigInvalid, "no mechanisms given");
  const size_t runs = Positive(p, "runs");

  std::vector<TrainConfig> configs;
  for (const std::string& name : names) {
    TrainConfig c = base;
    std::tie(c.mechanism, c.sensitivity_mode) = ParseMechanismVariant(name);
    c.Validate();
    configs.push_back(c);
  }
  // traces[m * runs + r] holds the objective column of run r.
  std::vector<std::vector<double>> traces(names.size() * runs);
  ParallelFor(traces.size(), ResolveThreads(NonNegative(p, "threads")), [&](size_t i) {
    TrainConfig c = configs[i / runs];
    c.seed = inv.seed + i % runs;
    const TrainResult result = Train(pairs, graph, c);
    for (const TraceRow& row : result.trace.rows) traces[i].push_back(row.objective);
  });
  const size_t length = traces.front().size();

  std::ostringstream csv;
  csv << "iter";
  for (const std::string& name : names) csv << ',' << name;
  csv << '\n';
  std::vector<double> final_mean(names.size(), 0.0);
  for (size_t t = 0; t < length; ++t) {
    csv << t;
    for (size_t m = 0; m < names.size(); ++m) {
      double sum = 0.0;
      for (size_t r = 0; r < runs; ++r) sum += traces[m * runs + r][t];
      const double mean = sum / static_cast<double>(runs);
      csv << ',' << FormatDouble(mean);
      final_mean[m] = mean;
    }
    csv << '\n';
  }
  WriteTextFile(OutputPath(inv.out_dir, p.String("out")), csv.str());
  Json summary = Json::object();
  for (size_t m = 0; m < names.size(); ++m) summary[names[m]] = final_mean[m];
  out << Json({{"kappa", base.budget.kappa}, {"final_objective", summary}}).dump() << '\n';
  return kExitOk;
}

// Writes the resolved config, then runs the command. Errors propagate.
inline int Execute(const Invocation& inv, std::ostream& out) {
  internal::WriteTextFile(
      internal::OutputPath(inv.out_dir, inv.command + ".resolved.json"),
      inv.ToJson().dump(2) + "\n");
  const Params p(inv.params);
  if (inv.command == "synth") return CmdSynth(inv, p, out);
  if (inv.command == "analyze-kappa") return CmdAnalyzeKappa(inv, p, out);
  if (inv.command == "train") return CmdTrain(inv, p, out);
  if (inv.command == "evaluate") return CmdEvaluate(inv, p, out);
  if (inv.command == "sweep") return CmdSweep(inv, p, out);
  if (inv.command == "compare-mechanisms") return CmdCompareMechanisms(inv, p, out);
  throw Error(ErrorCode::kConfigInvalid, "unknown command '" + inv.command + "'");
}

// Resolves and runs one command, reporting failures on `err` and mapping
// them to exit codes.
inline int RunCommand(const std::string& command,
                      const std::optional<std::string>& config_path,
                      const std::map<std::string, std::string>& flags,
                      const std::optional<std::string>& seed_flag,
                      const std::optional<std::string>& out_dir_flag,
                      std::ostream& out, std::ostream& err) {
  try {
    const Invocation inv =
        ResolveInvocation(command, config_path, flags, seed_flag, out_dir_flag);
    return Execute(inv, out);
  } catch (const Error& e) {
    err << "dppml " << command << ": " << e.what() << '\n';
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "dppml " << command << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace dppml::cli

#endif  // DPPML_COMMANDS_HPP_
