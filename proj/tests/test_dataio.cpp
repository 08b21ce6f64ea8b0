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

#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dppml/dppml.hpp"
#include "test_util.hpp"

namespace dppml {
namespace {

template <typename Fn>
ErrorCode CodeOf(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

template <typename Fn>
std::string MessageOf(Fn fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

SampleSet FromRows(const std::vector<std::vector<double>>& rows,
                   const std::vector<int>& labels) {
  SampleSet s;
  s.x = Matrix(rows.size(), rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) s.x(r, c) = rows[r][c];
    s.ids.push_back("r" + std::to_string(r));
  }
  s.labels = labels;
  return s;
}

TEST(SynthTwoGaussians, CountsAndLabels) {
  const SampleSet s = SynthTwoGaussians(100, 1);
  EXPECT_EQ(s.size(), 200u);
  EXPECT_EQ(s.dimension(), 2u);
  for (size_t k = 0; k < 200; ++k) EXPECT_EQ(s.labels[k], k < 100 ? 0 : 1);
  std::set<std::string> ids(s.ids.begin(), s.ids.end());
  EXPECT_EQ(ids.size(), 200u);
  EXPECT_EQ(SynthTwoGaussians(500, 2, kBenchmarkStrips).dimension(), 4u);
  EXPECT_THROW(SynthTwoGaussians(0, 1), Error);
}

TEST(SynthTwoGaussians, DeterministicPerSeed) {
  EXPECT_EQ(SynthTwoGaussians(50, 7).x.data, SynthTwoGaussians(50, 7).x.data);
  EXPECT_NE(SynthTwoGaussians(50, 7).x.data, SynthTwoGaussians(50, 8).x.data);
}

TEST(SynthTwoGaussians, ClassSeparationAcrossStrips) {
  for (const StripShape& shape : {kToyStrips, kBenchmarkStrips}) {
    const size_t n = 20000;
    const SampleSet s = SynthTwoGaussians(n, 3, shape);
    double mean[2] = {0.0, 0.0};
    double along_sq = 0.0;
    for (size_t k = 0; k < 2 * n; ++k) {
      mean[s.labels[k]] += s.x(k, 1) / n;
      along_sq += s.x(k, 0) * s.x(k, 0) / (2.0 * n);
    }
    double within = 0.0;
    for (size_t k = 0; k < 2 * n; ++k) {
      const double diff = s.x(k, 1) - mean[s.labels[k]];
      within += diff * diff / (2.0 * n - 2.0);
    }
    EXPECT_NEAR((mean[1] - mean[0]) / std::sqrt(within), shape.separation_ratio,
                0.05 * shape.separation_ratio);
    EXPECT_NEAR(std::sqrt(along_sq), shape.major_std, 0.03 * shape.major_std);
  }
}

TEST(Normalize, PerRowExample) {
  const SampleSet s = FromRows({{3.0, -2.0}, {0.1, 0.2}}, {0, 1});
  const SampleSet out = Normalize(s, NormMode::kL1, NormalizeScope::kPerRow);
  EXPECT_NEAR(out.x(0, 0), 3.0 * kNormGuard / 5.0, 1e-15);
  EXPECT_NEAR(out.x(0, 1), -2.0 * kNormGuard / 5.0, 1e-15);
  EXPECT_EQ(out.x(1, 0), 0.1);
  EXPECT_EQ(out.x(1, 1), 0.2);
}

TEST(Normalize, GlobalScalesByTheLargestRow) {
  const SampleSet s = FromRows({{3.0, -2.0}, {0.1, 0.2}}, {0, 1});
  const SampleSet out = Normalize(s, NormMode::kL1);
  const double factor = kNormGuard / 5.0;
  for (size_t k = 0; k < s.x.data.size(); ++k) {
    EXPECT_NEAR(out.x.data[k], s.x.data[k] * factor, 1e-15);
  }
  const SampleSet l2 = Normalize(FromRows({{3.0, 4.0}}, {0}), NormMode::kL2);
  EXPECT_NEAR(L2Norm(l2.x.Row(0)), kNormGuard, 1e-15);
}

TEST(Normalize, BoundedAndIdempotent) {
  const SampleSet s = SynthTwoGaussians(200, 5, kBenchmarkStrips);
  for (NormMode mode : {NormMode::kL1, NormMode::kL2}) {
    for (NormalizeScope scope : {NormalizeScope::kGlobal, NormalizeScope::kPerRow}) {
      const SampleSet once = Normalize(s, mode, scope);
      for (size_t r = 0; r < once.size(); ++r) {
        EXPECT_LE(Norm(once.x.Row(r), mode), kNormGuard * (1.0 + 1e-12));
      }
      EXPECT_EQ(Normalize(once, mode, scope).x.data, once.x.data);
    }
  }
}

TEST(Normalize, ZeroRowsStayZero) {
  const SampleSet s = FromRows({{0.0, 0.0}, {4.0, 0.0}}, {0, 1});
  EXPECT_EQ(CountZeroRows(s), 1u);
  for (NormalizeScope scope : {NormalizeScope::kGlobal, NormalizeScope::kPerRow}) {
    const SampleSet out = Normalize(s, NormMode::kL1, scope);
    EXPECT_EQ(out.x(0, 0), 0.0);
    EXPECT_EQ(out.x(0, 1), 0.0);
  }
}

TEST(SamplePairs, DensityOnThousandIndividuals) {
  const SampleSet s = SynthTwoGaussians(500, 1, kBenchmarkStrips);
  const auto pairs = SamplePairs(s, 2.0, false, 4);
  const PairGraph g = PairGraph::Build(pairs);
  EXPECT_EQ(static_cast<long>(pairs.size()), std::lround(2.0 * g.num_nodes()));
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, int> label;
  for (size_t k = 0; k < s.size(); ++k) label[s.ids[k]] = s.labels[k];
  for (const auto& p : pairs) {
    EXPECT_NE(p.i, p.j);
    EXPECT_TRUE(seen.insert(std::minmax(p.i, p.j)).second);
    EXPECT_EQ(p.y, label[p.i] == label[p.j] ? 0 : 1);
  }
}

TEST(SamplePairs, DeltaIsTheFeatureDifference) {
  const SampleSet s = SynthTwoGaussians(20, 2);
  std::map<std::string, size_t> row;
  for (size_t k = 0; k < s.size(); ++k) row[s.ids[k]] = k;
  for (const auto& p : SamplePairs(s, 1.5, false, 3)) {
    for (size_t c = 0; c < s.dimension(); ++c) {
      EXPECT_EQ(p.delta_x[c], s.x(row[p.i], c) - s.x(row[p.j], c));
    }
  }
}

TEST(SamplePairs, Balanced) {
  const SampleSet s = SynthTwoGaussians(100, 1);
  const auto pairs = SamplePairs(s, 2.0, true, 5);
  size_t dissimilar = 0;
  for (const auto& p : pairs) dissimilar += p.y;
  EXPECT_EQ(2 * dissimilar, pairs.size());
}

TEST(SamplePairs, InfeasibleRequests) {
  const SampleSet two = FromRows({{0.0}, {1.0}}, {0, 1});
  EXPECT_EQ(CodeOf([&] { SamplePairs(two, 2.0, false, 1); }), ErrorCode::kInfeasibleDensity);
  const SampleSet s = SynthTwoGaussians(10, 1);
  EXPECT_EQ(CodeOf([&] { SamplePairs(s, 0.0, false, 1); }), ErrorCode::kInfeasibleDensity);
  const SampleSet one_class = FromRows({{0.0}, {1.0}, {2.0}, {3.0}, {4.0}, {5.0}},
                                       {0, 0, 0, 0, 0, 0});
  EXPECT_EQ(CodeOf([&] { SamplePairs(one_class, 1.0, true, 1); }),
            ErrorCode::kInfeasibleBalance);
}

TEST(SamplePairs, DeterministicPerSeed) {
  const SampleSet s = SynthTwoGaussians(50, 1);
  const auto a = SamplePairs(s, 2.0, false, 9);
  const auto b = SamplePairs(s, 2.0, false, 9);
  ASSERT_EQ(a.size(), b.size());
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].i, b[k].i);
    EXPECT_EQ(a[k].j, b[k].j);
  }
}

TEST(SamplePairsFromPool, LeavesTheRestOut) {
  const SampleSet s = SynthTwoGaussians(500, 1, kBenchmarkStrips);
  const auto pairs = SamplePairsFromPool(s, 2.0, 0.5, false, 1);
  const PairSplit split = SplitByPairs(s, pairs);
  EXPECT_LE(split.train.size(), 500u);
  EXPECT_GE(split.test.size(), 500u);
  EXPECT_EQ(split.train.size() + split.test.size(), 1000u);
  EXPECT_THROW(SamplePairsFromPool(s, 2.0, 0.0, false, 1), Error);
}

TEST(SampleToyPairs, ForestWithKappaOne) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const testutil::ToyData toy = testutil::MakeToy(seed);
    ASSERT_EQ(toy.pairs.size(), 150u);
    size_t dissimilar = 0;
    for (const auto& p : toy.pairs) dissimilar += p.y;
    EXPECT_EQ(dissimilar, 50u);
    const PairGraph g = PairGraph::Build(toy.pairs);
    KappaOptions options;
    options.exact_limit = 1000;
    EXPECT_EQ(KappaExact(g, options).kappa, 1);
    // A forest has |E| = |V| - components.
    EXPECT_EQ(g.num_edges(), g.num_nodes() - ComponentCount(g));
  }
}

TEST(DownsampleMajority, Behaviour) {
  const SampleSet balanced = SynthTwoGaussians(30, 1);
  EXPECT_EQ(DownsampleMajority(balanced, 1).x.data, balanced.x.data);
  SampleSet skewed = SynthTwoGaussians(900, 1);
  std::vector<size_t> keep;
  for (size_t k = 0; k < 900; ++k) keep.push_back(k);
  for (size_t k = 900; k < 1000; ++k) keep.push_back(k);
  skewed = skewed.Subset(keep);
  const SampleSet down = DownsampleMajority(skewed, 2);
  size_t ones = 0;
  for (int l : down.labels) ones += l;
  EXPECT_EQ(down.size(), 200u);
  EXPECT_EQ(ones, 100u);
  EXPECT_EQ(DownsampleMajority(skewed, 2).ids, down.ids);
  const SampleSet single = FromRows({{0.0}, {1.0}}, {1, 1});
  EXPECT_EQ(CodeOf([&] { DownsampleMajority(single, 1); }), ErrorCode::kSingleClass);
}

TEST(SamplesCsv, ParsesASmallFile) {
  std::istringstream in("id,label,a,b\nx,0,1.5,2\ny,1,-3,4e-1\nz,0,0,0\n");
  const SampleSet s = ParseSamplesCsv(in);
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.dimension(), 2u);
  EXPECT_EQ(s.ids, (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(s.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(s.x.data, (std::vector<double>{1.5, 2.0, -3.0, 0.4, 0.0, 0.0}));
}

TEST(SamplesCsv, ErrorsNameRowAndColumn) {
  std::istringstream bad("id,label,a\nx,0,1\ny,1,oops\n");
  const std::string message = MessageOf([&] { ParseSamplesCsv(bad); });
  EXPECT_NE(message.find("row 3, column 3"), std::string::npos) << message;
  std::istringstream bad_label("label,a\nzero,1\n");
  EXPECT_EQ(CodeOf([&] { ParseSamplesCsv(bad_label); }), ErrorCode::kParseError);
  std::istringstream ragged("label,a\n0,1,2\n");
  EXPECT_EQ(CodeOf([&] { ParseSamplesCsv(ragged); }), ErrorCode::kParseError);
  std::istringstream no_label("id,a\nx,1\n");
  EXPECT_EQ(CodeOf([&] { ParseSamplesCsv(no_label); }), ErrorCode::kMissingLabelColumn);
  std::istringstream duplicate("id,label,a\nx,0,1\nx,1,2\n");
  EXPECT_EQ(CodeOf([&] { ParseSamplesCsv(duplicate); }), ErrorCode::kParseError);
}

TEST(SamplesCsv, WideFileAndRowNumberIds) {
  std::ostringstream text;
  text << "label";
  for (int c = 0; c < 123; ++c) text << ",f" << c;
  text << '\n';
  for (int r = 0; r < 4; ++r) {
    text << r % 2;
    for (int c = 0; c < 123; ++c) text << ',' << (r * 1000 + c) * 0.001;
    text << '\n';
  }
  std::istringstream in(text.str());
  const SampleSet s = ParseSamplesCsv(in);
  EXPECT_EQ(s.dimension(), 123u);
  EXPECT_EQ(s.ids, (std::vector<std::string>{"0", "1", "2", "3"}));
}

TEST(SamplesCsv, DelimiterAndCustomLabel) {
  std::istringstream in("cls;v\n1;2.5\n0;-1\n");
  CsvSchema schema;
  schema.label_column = "cls";
  schema.delimiter = ';';
  const SampleSet s = ParseSamplesCsv(in, schema);
  EXPECT_EQ(s.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(s.x.data, (std::vector<double>{2.5, -1.0}));
}

TEST(SamplesCsv, RoundTripIsExact) {
  const SampleSet s = Normalize(SynthTwoGaussians(40, 2, kBenchmarkStrips), NormMode::kL1);
  std::ostringstream out;
  WriteSamplesCsv(out, s);
  std::istringstream in(out.str());
  const SampleSet back = ParseSamplesCsv(in);
  EXPECT_EQ(back.x.data, s.x.data);
  EXPECT_EQ(back.labels, s.labels);
  EXPECT_EQ(back.ids, s.ids);
}

TEST(PairsCsv, OptionalHeaderAndRoundTrip) {
  std::istringstream headerless("a,b,0,0.5,-0.25\nb,c,1,1e-3,2\n");
  const auto pairs = ParsePairsCsv(headerless);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].i, "a");
  EXPECT_EQ(pairs[1].y, 1);
  EXPECT_EQ(pairs[1].delta_x, (std::vector<double>{0.001, 2.0}));
  std::ostringstream out;
  WritePairsCsv(out, pairs);
  EXPECT_EQ(out.str().substr(0, 12), "i,j,y,dx1,dx");
  std::istringstream with_header(out.str());
  const auto back = ParsePairsCsv(with_header);
  ASSERT_EQ(back.size(), 2u);
  for (size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].i, pairs[k].i);
    EXPECT_EQ(back[k].j, pairs[k].j);
    EXPECT_EQ(back[k].y, pairs[k].y);
    EXPECT_EQ(back[k].delta_x, pairs[k].delta_x);
  }
}

TEST(PairsCsv, TabDelimiter) {
  std::istringstream in("a\tb\t1\t0.5\n");
  const auto pairs = ParsePairsCsv(in, '\t');
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].delta_x, (std::vector<double>{0.5}));
}

TEST(PairsCsv, Errors) {
  std::istringstream bad_y("a,b,0\nb,c,2\n");
  const std::string message = MessageOf([&] { ParsePairsCsv(bad_y); });
  EXPECT_NE(message.find("row 2, column 3"), std::string::npos) << message;
  std::istringstream short_row("a,b,0\nb\n");
  EXPECT_EQ(CodeOf([&] { ParsePairsCsv(short_row); }), ErrorCode::kParseError);
  std::istringstream bad_value("a,b,0,x\n");
  EXPECT_EQ(CodeOf([&] { ParsePairsCsv(bad_value); }), ErrorCode::kParseError);
  std::istringstream ragged("a,b,0,1\nb,c,1,1,2\n");
  EXPECT_EQ(CodeOf([&] { ParsePairsCsv(ragged); }), ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([] { LoadPairsCsv("/nonexistent/pairs.csv"); }), ErrorCode::kIo);
}

TEST(SplitByPairs, TrainIsPairMembers) {
  const SampleSet s = FromRows({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 0, 1});
  const std::vector<PairwiseDatum> pairs{MakePair(s, 0, 2), MakePair(s, 2, 3)};
  const PairSplit split = SplitByPairs(s, pairs);
  EXPECT_EQ(split.train, (std::vector<size_t>{0, 2, 3}));
  EXPECT_EQ(split.test, (std::vector<size_t>{1}));
  EXPECT_EQ(pairs[0].y, 0);
  EXPECT_EQ(pairs[1].y, 1);
  EXPECT_EQ(pairs[1].delta_x, (std::vector<double>{-1.0}));
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 123456789.125, 0.0}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
}

}  // namespace
}  // namespace dppml
