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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "dppml/dppml.hpp"
#include "test_util.hpp"

namespace dppml {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix Column(std::vector<double> values) {
  Matrix m(values.size(), 1);
  m.data = std::move(values);
  return m;
}

// Brute-force kNN: sort all rows by (distance, index), count the first k
// labels, break vote ties by the earliest position in that order.
int OracleKnn(const Matrix& train, const std::vector<int>& labels,
              const std::vector<double>& query, size_t k) {
  std::vector<std::pair<double, size_t>> order;
  for (size_t i = 0; i < train.rows; ++i) {
    double sum = 0.0;
    for (size_t c = 0; c < train.cols; ++c) {
      sum += (train(i, c) - query[c]) * (train(i, c) - query[c]);
    }
    order.emplace_back(sum, i);
  }
  std::sort(order.begin(), order.end());
  std::map<int, int> count;
  for (size_t j = 0; j < k; ++j) ++count[labels[order[j].second]];
  int top = 0;
  for (const auto& [label, c] : count) top = std::max(top, c);
  for (size_t j = 0; j < k; ++j) {
    if (count[labels[order[j].second]] == top) return labels[order[j].second];
  }
  return -1;
}

double SingleQuery(const Matrix& train, const std::vector<int>& labels, double query,
                   int label, size_t k) {
  const Matrix test = Column({query});
  const std::vector<int> test_labels{label};
  return KnnAccuracyInSpace(train, labels, test, test_labels, k);
}

TEST(Project, IdentityAndZero) {
  Matrix x(3, 2);
  x.data = {1.0, 2.0, -3.0, 4.0, 0.5, 0.25};
  EXPECT_EQ(Project(MetricModel::Identity(2), x).data, x.data);
  const MetricModel zero{Matrix(1, 2)};
  const Matrix p = Project(zero, x);
  EXPECT_EQ(p.rows, 3u);
  EXPECT_EQ(p.cols, 1u);
  for (double v : p.data) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(Project(MetricModel::Identity(3), x), Error);
}

TEST(Project, DistancesMatchTheMetric) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  MetricModel model{Matrix(2, 3)};
  for (double& v : model.w.data) v = n(gen);
  Matrix x(2, 3);
  for (double& v : x.data) v = n(gen);
  const Matrix p = Project(model, x);
  std::vector<double> dx(3);
  for (size_t c = 0; c < 3; ++c) dx[c] = x(0, c) - x(1, c);
  const double projected =
      std::hypot(p(0, 0) - p(1, 0), p(0, 1) - p(1, 1));
  EXPECT_NEAR(projected, ProjectedDistance(model, dx), 1e-12);
}

TEST(Knn, WorkedExamples) {
  const Matrix train = Column({0.0, 1.0, 2.0, 3.0, 4.0});
  const std::vector<int> labels{0, 0, 1, 1, 1};
  EXPECT_EQ(SingleQuery(train, labels, 0.4, 0, 3), 1.0);
  EXPECT_EQ(SingleQuery(train, labels, 3.5, 1, 3), 1.0);
  EXPECT_EQ(SingleQuery(train, labels, 3.5, 0, 5), 0.0);
}

TEST(Knn, VoteTieGoesToNearestNeighbour) {
  const Matrix train = Column({0.0, 1.0, 2.0, 3.0, 4.0});
  const std::vector<int> labels{0, 0, 1, 1, 1};
  // Neighbours of 1.6: row 2 (label 1) then row 1 (label 0).
  EXPECT_EQ(SingleQuery(train, labels, 1.6, 1, 2), 1.0);
  EXPECT_EQ(SingleQuery(train, labels, 1.4, 0, 2), 1.0);
}

TEST(Knn, DistanceTieGoesToLowerIndex) {
  const Matrix train = Column({1.0, 0.0});
  EXPECT_EQ(SingleQuery(train, {1, 0}, 0.5, 1, 1), 1.0);
  EXPECT_EQ(SingleQuery(train, {0, 1}, 0.5, 0, 1), 1.0);
}

TEST(Knn, MatchesBruteForceOracle) {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> grid(0, 4);
  for (int t = 0; t < 300; ++t) {
    const size_t n = 3 + gen() % 20;
    const size_t k = 1 + gen() % std::min<size_t>(n, 7);
    Matrix train(n, 2);
    std::vector<int> labels(n);
    // Integer coordinates make distance ties common.
    for (double& v : train.data) v = grid(gen);
    for (int& l : labels) l = static_cast<int>(gen() % 3);
    Matrix test(10, 2);
    for (double& v : test.data) v = grid(gen);
    std::vector<int> test_labels(10);
    size_t expected = 0;
    for (size_t q = 0; q < 10; ++q) {
      test_labels[q] = static_cast<int>(gen() % 3);
      const std::vector<double> query{test(q, 0), test(q, 1)};
      expected += OracleKnn(train, labels, query, k) == test_labels[q];
    }
    EXPECT_DOUBLE_EQ(KnnAccuracyInSpace(train, labels, test, test_labels, k),
                     expected / 10.0);
  }
}

TEST(Knn, Errors) {
  const Matrix empty(0, 1);
  const Matrix test = Column({0.0});
  try {
    KnnAccuracyInSpace(empty, {}, test, std::vector<int>{0}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyTrainSet);
  }
  const Matrix train = Column({0.0, 1.0});
  EXPECT_THROW(KnnAccuracyInSpace(train, std::vector<int>{0, 1}, test, std::vector<int>{0}, 3),
               Error);
  EXPECT_THROW(KnnAccuracyInSpace(train, std::vector<int>{0}, test, std::vector<int>{0}, 1),
               Error);
}

TEST(Knn, LeaveOneOutExcludesTheQuery) {
  const Matrix x = Column({0.0, 0.1, 5.0, 5.1});
  const std::vector<int> labels{0, 0, 1, 1};
  EXPECT_EQ(KnnLeaveOneOutInSpace(x, labels, 1), 1.0);
  const std::vector<int> alternating{0, 1, 0, 1};
  EXPECT_EQ(KnnLeaveOneOutInSpace(x, alternating, 1), 0.0);
  EXPECT_THROW(KnnLeaveOneOutInSpace(x, labels, 4), Error);
}

TEST(Knn, InvariantUnderRotationOfTheProjection) {
  const testutil::ToyData toy = testutil::MakeToy(3);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n;
  MetricModel model{Matrix(2, 2)};
  for (double& v : model.w.data) v = n(gen);
  const double base = KnnLeaveOneOutInSpace(Project(model, toy.samples.x),
                                            toy.samples.labels, 5);
  for (double angle : {0.3, 1.2, 2.5}) {
    MetricModel rotated{Matrix(2, 2)};
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (size_t col = 0; col < 2; ++col) {
      rotated.w(0, col) = c * model.w(0, col) - s * model.w(1, col);
      rotated.w(1, col) = s * model.w(0, col) + c * model.w(1, col);
    }
    EXPECT_EQ(KnnLeaveOneOutInSpace(Project(rotated, toy.samples.x), toy.samples.labels, 5),
              base);
  }
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kNonPriv, Method::kDpp, Method::kDppS, Method::kNodeDp,
                   Method::kInputPer}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_EQ(ParseMethod("node-dp"), Method::kNodeDp);
  EXPECT_THROW(ParseMethod("laplace"), Error);
}

TEST(Summarize, MeanAndSampleStd) {
  const ExperimentReport r = Summarize(Method::kDpp, 2.0, {0.5, 0.7, 0.9});
  EXPECT_EQ(r.runs, 3u);
  EXPECT_NEAR(r.mean_accuracy, 0.7, 1e-15);
  EXPECT_NEAR(r.std_accuracy, 0.2, 1e-15);
  EXPECT_EQ(Summarize(Method::kDpp, 1.0, {0.4}).std_accuracy, 0.0);
}

TEST(MethodConfig, SelectsSensitivityAndKappa) {
  TrainConfig base;
  const TrainConfig dpp = MethodConfig(base, Method::kDpp, 2.0, 3, 7, 5);
  EXPECT_EQ(dpp.sensitivity_mode, SensitivityMode::kBasic);
  EXPECT_EQ(dpp.budget.kappa, 3);
  EXPECT_EQ(dpp.seed, 5u);
  const TrainConfig reduced = MethodConfig(base, Method::kDppS, 2.0, 3, 7, 5);
  EXPECT_EQ(reduced.sensitivity_mode, SensitivityMode::kReduced);
  EXPECT_EQ(reduced.budget.kappa, 3);
  EXPECT_EQ(MethodConfig(base, Method::kNodeDp, 2.0, 3, 7, 5).budget.kappa, 7);
  const TrainConfig plain = MethodConfig(base, Method::kNonPriv, 2.0, 3, 7, 5);
  EXPECT_EQ(plain.mechanism, Mechanism::kNone);
  EXPECT_TRUE(IsInfinite(plain.budget.epsilon));
}

class ToyExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const testutil::ToyData toy = testutil::MakeToy(1);
    bench_ = new Benchmark(MakeBenchmark(toy.samples, toy.pairs));
  }
  static void TearDownTestSuite() { delete bench_; }

  static ExperimentOptions Options() {
    ExperimentOptions o;
    o.base = testutil::ToyConfig(1);
    o.repeats = 4;
    o.kappa_options.exact_limit = 1000;
    o.threads = 1;
    return o;
  }

  static Benchmark* bench_;
};
Benchmark* ToyExperiment::bench_ = nullptr;

TEST_F(ToyExperiment, SplitsByPairMembership) {
  EXPECT_EQ(bench_->train.size(), 160u);
  EXPECT_EQ(bench_->test.size(), 40u);
  EXPECT_EQ(bench_->graph.num_edges(), 150);
}

TEST_F(ToyExperiment, LearnedMetricBeatsRawKnn) {
  TrainConfig c = testutil::ToyConfig(1);
  c.mechanism = Mechanism::kNone;
  const TrainResult r = Train(bench_->pairs, bench_->graph, c);
  const double learned = KnnAccuracy(r.model, bench_->train.x, bench_->train.labels,
                                     bench_->test.x, bench_->test.labels, 5);
  const double raw = KnnAccuracyInSpace(bench_->train.x, bench_->train.labels,
                                        bench_->test.x, bench_->test.labels, 5);
  EXPECT_GT(learned, raw);
}

TEST_F(ToyExperiment, NoiselessPrivateRunsMatchNonPrivate) {
  ExperimentOptions o = Options();
  o.methods = {Method::kNonPriv, Method::kDpp, Method::kDppS, Method::kNodeDp};
  o.epsilons = {kInf};
  const auto reports = RunExperiment(*bench_, o);
  ASSERT_EQ(reports.size(), 4u);
  for (const auto& r : reports) EXPECT_EQ(r.per_run, reports[0].per_run);
}

TEST_F(ToyExperiment, ReportShapeAndOrder) {
  ExperimentOptions o = Options();
  o.methods = {Method::kDppS, Method::kNonPriv, Method::kInputPer};
  o.epsilons = {1.0, 4.0};
  const auto reports = RunExperiment(*bench_, o);
  ASSERT_EQ(reports.size(), 6u);
  const Method order[] = {Method::kDppS, Method::kDppS, Method::kNonPriv,
                          Method::kNonPriv, Method::kInputPer, Method::kInputPer};
  for (size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(reports[k].method, order[k]);
    EXPECT_EQ(reports[k].epsilon, k % 2 == 0 ? 1.0 : 4.0);
    EXPECT_EQ(reports[k].runs, 4u);
    for (double a : reports[k].per_run) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
  EXPECT_EQ(reports[2].per_run, reports[3].per_run);
}

TEST_F(ToyExperiment, ThreadCountDoesNotChangeResults) {
  ExperimentOptions o = Options();
  o.methods = {Method::kDpp, Method::kDppS};
  o.epsilons = {1.0, 2.0};
  const auto serial = RunExperiment(*bench_, o);
  o.threads = 4;
  const auto parallel = RunExperiment(*bench_, o);
  ASSERT_EQ(serial.size(), parallel.size());
  for (size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].per_run, parallel[k].per_run);
  }
}

TEST_F(ToyExperiment, RejectsBadOptions) {
  ExperimentOptions o = Options();
  o.methods = {Method::kDpp};
  o.epsilons = {};
  EXPECT_THROW(RunExperiment(*bench_, o), Error);
  o.epsilons = {0.0};
  EXPECT_THROW(RunExperiment(*bench_, o), Error);
  o.epsilons = {1.0};
  o.repeats = 0;
  EXPECT_THROW(RunExperiment(*bench_, o), Error);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  ParallelFor(hits.size(), 8, [&](size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(ParallelFor(100, 4,
                           [](size_t i) {
                             if (i == 37) throw Error(ErrorCode::kIo, "boom");
                           }),
               Error);
}

}  // namespace
}  // namespace dppml
