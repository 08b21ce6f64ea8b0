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

// kNN utility of a learned metric and repeated accuracy-vs-epsilon runs.

#ifndef DPPML_EVAL_HPP_
#define DPPML_EVAL_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/dataio.hpp"
#include "dppml/dml.hpp"
#include "dppml/kappa.hpp"
#include "dppml/mechanisms.hpp"
#include "dppml/pairgraph.hpp"

namespace dppml {

// X W^T.
inline Matrix Project(const MetricModel& model, const Matrix& x) {
  if (x.cols != model.d()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "data has " + std::to_string(x.cols) + " columns, model expects " +
                    std::to_string(model.d()));
  }
  Matrix out(x.rows, model.d_prime());
  for (size_t i = 0; i < x.rows; ++i) {
    for (size_t r = 0; r < model.d_prime(); ++r) {
      out(i, r) = Dot(model.w.Row(r), x.Row(i));
    }
  }
  return out;
}

namespace internal {

inline void CheckKnnInputs(const Matrix& train_x, std::span<const int> train_labels,
                           const Matrix& test_x, std::span<const int> test_labels,
                           size_t k, size_t usable) {
  if (usable == 0) throw Error(ErrorCode::kEmptyTrainSet, "no training rows");
  if (k < 1 || k > usable) {
    throw Error(ErrorCode::kInvalidArgument,
                "k must lie in [1, " + std::to_string(usable) + "]");
  }
  if (train_x.cols != test_x.cols || train_labels.size() != train_x.rows ||
      test_labels.size() != test_x.rows) {
    throw Error(ErrorCode::kDimensionMismatch, "train/test shapes disagree");
  }
}

// Majority label among the k nearest training rows to `query`, skipping row
// `skip`. Equal distances prefer the lower training index; a tied vote goes
// to the label of the nearest neighbour holding a top count.
inline int KnnPredict(const Matrix& train_x, std::span<const int> train_labels,
                      std::span<const double> query, size_t k, size_t skip,
                      std::vector<std::pair<double, size_t>>& dist) {
  dist.clear();
  for (size_t i = 0; i < train_x.rows; ++i) {
    if (i == skip) continue;
    const auto row = train_x.Row(i);
    double sum = 0.0;
    for (size_t c = 0; c < row.size(); ++c) {
      const double diff = row[c] - query[c];
      sum += diff * diff;
    }
    dist.emplace_back(sum, i);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
  std::map<int, size_t> votes;
  for (size_t j = 0; j < k; ++j) ++votes[train_labels[dist[j].second]];
  size_t best_count = 0;
  for (const auto& [label, count] : votes) best_count = std::max(best_count, count);
  for (size_t j = 0; j < k; ++j) {
    const int label = train_labels[dist[j].second];
    if (votes[label] == best_count) return label;
  }
  return train_labels[dist[0].second];
}

}  // namespace internal

// Fraction of test rows whose k-nearest-neighbour vote (Euclidean) matches
// their label.
inline double KnnAccuracyInSpace(const Matrix& train_x,
                                 std::span<const int> train_labels,
                                 const Matrix& test_x,
                                 std::span<const int> test_labels, size_t k) {
  internal::CheckKnnInputs(train_x, train_labels, test_x, test_labels, k,
                           train_x.rows);
  if (test_x.rows == 0) return 0.0;
  std::vector<std::pair<double, size_t>> dist;
  size_t correct = 0;
  for (size_t q = 0; q < test_x.rows; ++q) {
    const int predicted = internal::KnnPredict(train_x, train_labels, test_x.Row(q),
                                               k, train_x.rows, dist);
    if (predicted == test_labels[q]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_x.rows);
}

// Leave-one-out variant: every row is classified by the others.
inline double KnnLeaveOneOutInSpace(const Matrix& x, std::span<const int> labels,
                                    size_t k) {
  internal::CheckKnnInputs(x, labels, x, labels, k, x.rows == 0 ? 0 : x.rows - 1);
  std::vector<std::pair<double, size_t>> dist;
  size_t correct = 0;
  for (size_t q = 0; q < x.rows; ++q) {
    if (internal::KnnPredict(x, labels, x.Row(q), k, q, dist) == labels[q]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows);
}

inline double KnnAccuracy(const MetricModel& model, const Matrix& train_x,
                          std::span<const int> train_labels, const Matrix& test_x,
                          std::span<const int> test_labels, size_t k) {
  return KnnAccuracyInSpace(Project(model, train_x), train_labels,
                            Project(model, test_x), test_labels, k);
}

enum class Method { kNonPriv, kDpp, kDppS, kNodeDp, kInputPer };

inline std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kNonPriv: return "nonpriv";
    case Method::kDpp: return "dpp";
    case Method::kDppS: return "dpp_s";
    case Method::kNodeDp: return "node_dp";
    case Method::kInputPer: return "input_per";
  }
  return "unknown";
}

inline Method ParseMethod(std::string_view name) {
  for (Method m : {Method::kNonPriv, Method::kDpp, Method::kDppS,
                   Method::kNodeDp, Method::kInputPer}) {
    if (name == MethodName(m)) return m;
  }
  if (name == "dpp-s") return Method::kDppS;
  if (name == "node-dp") return Method::kNodeDp;
  if (name == "input-per") return Method::kInputPer;
  throw Error(ErrorCode::kConfigInvalid, "unknown method '" + std::string(name) + "'");
}

struct ExperimentReport {
  Method method = Method::kNonPriv;
  double epsilon = 0.0;
  size_t runs = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation
  std::vector<double> per_run;
};

inline ExperimentReport Summarize(Method method, double epsilon,
                                  std::vector<double> per_run) {
  ExperimentReport report{method, epsilon, per_run.size(), 0.0, 0.0,
                          std::move(per_run)};
  const double n = static_cast<double>(report.runs);
  if (report.runs == 0) return report;
  double sum = 0.0;
  for (double a : report.per_run) sum += a;
  report.mean_accuracy = sum / n;
  if (report.runs > 1) {
    double sq = 0.0;
    for (double a : report.per_run) {
      sq += (a - report.mean_accuracy) * (a - report.mean_accuracy);
    }
    report.std_accuracy = std::sqrt(sq / (n - 1.0));
  }
  return report;
}

// Training pairs with the graph they induce, and the individuals used for
// kNN: train rows are those appearing in a pair, test rows are the rest.
struct Benchmark {
  std::vector<PairwiseDatum> pairs;
  PairGraph graph;
  SampleSet train;
  SampleSet test;
};

inline Benchmark MakeBenchmark(const SampleSet& samples,
                               std::vector<PairwiseDatum> pairs,
                               RelationKind kind = RelationKind::kTransitive) {
  Benchmark b;
  const PairSplit split = SplitByPairs(samples, pairs);
  b.train = samples.Subset(split.train);
  b.test = samples.Subset(split.test);
  b.graph = PairGraph::Build(pairs, kind);
  b.pairs = std::move(pairs);
  return b;
}

struct ExperimentOptions {
  std::vector<Method> methods;
  std::vector<double> epsilons;
  size_t repeats = 20;
  TrainConfig base;  // mechanism, h, |B|, epochs, delta and seed
  size_t k = 5;
  KappaChoice kappa_choice = KappaChoice::kAuto;
  KappaOptions kappa_options;
  size_t threads = 0;  // 0: hardware concurrency capped by DPP_THREADS
};

// Worker count: `requested` (or the hardware concurrency when 0), capped by
// the DPP_THREADS environment variable when it holds a positive integer.
inline size_t ResolveThreads(size_t requested) {
  size_t threads = requested;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DPP_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) threads = std::min(threads, static_cast<size_t>(cap));
  }
  return std::max<size_t>(threads, 1);
}

// Runs fn(0..count-1) on up to `threads` workers.
template <typename Fn>
void ParallelFor(size_t count, size_t threads, Fn fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline constexpr uint64_t kInputPerturbStream = 77;

// Training configuration for one (method, epsilon, run) cell.
inline TrainConfig MethodConfig(const TrainConfig& base, Method method,
                                double epsilon, int kappa, int node_kappa,
                                uint64_t seed) {
  TrainConfig config = base;
  config.seed = seed;
  config.budget.epsilon = epsilon;
  switch (method) {
    case Method::kNonPriv:
    case Method::kInputPer:
      config.mechanism = Mechanism::kNone;
      config.budget.epsilon = std::numeric_limits<double>::infinity();
      config.budget.kappa = std::max(kappa, 1);
      break;
    case Method::kDpp:
      config.sensitivity_mode = SensitivityMode::kBasic;
      config.budget.kappa = kappa;
      break;
    case Method::kDppS:
      config.sensitivity_mode = SensitivityMode::kReduced;
      config.budget.kappa = kappa;
      break;
    case Method::kNodeDp:
      config.sensitivity_mode = SensitivityMode::kBasic;
      config.budget.kappa = node_kappa;
      break;
  }
  return config;
}

// Trains and scores one cell.
inline double RunCell(const Benchmark& bench, const ExperimentOptions& options,
                      Method method, double epsilon, int kappa, int node_kappa,
                      size_t run) {
  const uint64_t seed = options.base.seed + run;
  const TrainConfig config =
      MethodConfig(options.base, method, epsilon, kappa, node_kappa, seed);
  TrainResult result;
  if (method == Method::kInputPer) {
    Rng rng = Rng(seed).Split(kInputPerturbStream);
    const auto noisy = InputPerturb(bench.pairs, epsilon, rng);
    result = Train(noisy, bench.graph, config);
  } else {
    result = Train(bench.pairs, bench.graph, config);
  }
  return KnnAccuracy(result.model, bench.train.x, bench.train.labels,
                     bench.test.x, bench.test.labels, options.k);
}

// One report per (method, epsilon), methods outermost. Run r of every cell
// uses seed base.seed + r, so methods share initializations and batch orders.
// NonPriv is trained once and its report repeated for every epsilon.
inline std::vector<ExperimentReport> RunExperiment(
    const Benchmark& bench, const ExperimentOptions& options) {
  if (options.repeats < 1) {
    throw Error(ErrorCode::kConfigInvalid, "repeats must be >= 1");
  }
  if (options.methods.empty() || options.epsilons.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "no methods or epsilons given");
  }
  for (double eps : options.epsilons) {
    if (!(eps > 0.0)) throw Error(ErrorCode::kConfigInvalid, "epsilon must be positive");
  }
  const int kappa =
      ComputeKappa(bench.graph, options.kappa_choice, options.kappa_options).kappa;
  const int node_kappa = KappaNodeDp(bench.graph).kappa;

  struct Cell {
    size_t report;
    Method method;
    double epsilon;
    size_t run;
  };
  std::vector<Cell> cells;
  const size_t num_eps = options.epsilons.size();
  for (size_t m = 0; m < options.methods.size(); ++m) {
    const Method method = options.methods[m];
    const size_t eps_cells = method == Method::kNonPriv ? 1 : num_eps;
    for (size_t e = 0; e < eps_cells; ++e) {
      for (size_t run = 0; run < options.repeats; ++run) {
        cells.push_back({m * num_eps + e, method, options.epsilons[e], run});
      }
    }
  }
  std::vector<double> accuracy(cells.size());
  ParallelFor(cells.size(), ResolveThreads(options.threads), [&](size_t i) {
    const Cell& c = cells[i];
    accuracy[i] = RunCell(bench, options, c.method, c.epsilon, kappa,
                          node_kappa, c.run);
  });

  std::vector<std::vector<double>> per_report(options.methods.size() * num_eps);
  for (size_t i = 0; i < cells.size(); ++i) {
    per_report[cells[i].report].push_back(accuracy[i]);
  }
  std::vector<ExperimentReport> reports;
  for (size_t m = 0; m < options.methods.size(); ++m) {
    for (size_t e = 0; e < num_eps; ++e) {
      const size_t source =
          options.methods[m] == Method::kNonPriv ? m * num_eps : m * num_eps + e;
      reports.push_back(Summarize(options.methods[m], options.epsilons[e],
                                  per_report[source]));
    }
  }
  return reports;
}

}  // namespace dppml

#endif  // DPPML_EVAL_HPP_
