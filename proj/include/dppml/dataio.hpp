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

// Sample sets, synthetic data, pair sampling and CSV ingestion.

#ifndef DPPML_DATAIO_HPP_
#define DPPML_DATAIO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/pairgraph.hpp"

namespace dppml {

// n labelled individuals with d features each.
struct SampleSet {
  Matrix x;
  std::vector<int> labels;
  std::vector<std::string> ids;

  size_t size() const { return x.rows; }
  size_t dimension() const { return x.cols; }

  void Validate() const {
    if (labels.size() != x.rows || ids.size() != x.rows) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "sample set has inconsistent lengths");
    }
  }

  // Rows `indices` in the given order.
  SampleSet Subset(std::span<const size_t> indices) const {
    SampleSet out;
    out.x = Matrix(indices.size(), x.cols);
    for (size_t k = 0; k < indices.size(); ++k) {
      std::copy_n(x.Row(indices[k]).begin(), x.cols, out.x.Row(k).begin());
      out.labels.push_back(labels.at(indices[k]));
      out.ids.push_back(ids.at(indices[k]));
    }
    return out;
  }
};

// Shape of two parallel Gaussian strips. Both classes share an anisotropic
// covariance with standard deviation `major_std` along the strips and
// `minor_std` across them; the class means differ by `separation_ratio`
// minor standard deviations across the strips. `angle` tilts the strips
// (radians, 0 = along the first axis). `noise_dims` extra features of
// standard deviation `noise_std` carry no class information.
struct StripShape {
  double major_std = 16.0;
  double minor_std = 0.1;
  double separation_ratio = 6.0;
  double angle = 0.0;
  size_t noise_dims = 0;
  double noise_std = 0.0;
};

// Toy shape: thin 2-D strips on which Euclidean kNN is poor but a metric
// that shrinks the strip direction classifies almost perfectly.
inline constexpr StripShape kToyStrips{};

// Benchmark shape: wider, well separated 4-D strips whose two noise features
// blur Euclidean neighbourhoods without dominating them.
inline constexpr StripShape kBenchmarkStrips{1.0, 0.3, 4.0, 0.0, 2, 0.5};

// Two parallel Gaussian strips with labels 0 and 1, class 0 first.
inline SampleSet SynthTwoGaussians(size_t n_per_class, uint64_t seed,
                                   const StripShape& shape = kToyStrips) {
  if (n_per_class < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_per_class must be >= 1");
  }
  Rng rng(seed);
  const double major[2] = {std::cos(shape.angle), std::sin(shape.angle)};
  const double minor[2] = {-major[1], major[0]};
  const double offset = 0.5 * shape.separation_ratio * shape.minor_std;
  SampleSet s;
  s.x = Matrix(2 * n_per_class, 2 + shape.noise_dims);
  for (size_t k = 0; k < 2 * n_per_class; ++k) {
    const int label = k < n_per_class ? 0 : 1;
    const double along = shape.major_std * rng.Normal();
    const double across =
        shape.minor_std * rng.Normal() + (label == 0 ? -offset : offset);
    s.x(k, 0) = along * major[0] + across * minor[0];
    s.x(k, 1) = along * major[1] + across * minor[1];
    for (size_t e = 0; e < shape.noise_dims; ++e) {
      s.x(k, 2 + e) = shape.noise_std * rng.Normal();
    }
    s.labels.push_back(label);
    s.ids.push_back(std::to_string(k));
  }
  return s;
}

inline constexpr double kNormGuard = 1.0 - 1e-6;

enum class NormalizeScope {
  kGlobal,  // one common factor; preserves the geometry of the data
  kPerRow,  // only rows above the bound are shrunk, each to the bound
};

inline size_t CountZeroRows(const SampleSet& s) {
  size_t count = 0;
  for (size_t r = 0; r < s.size(); ++r) {
    if (L1Norm(s.x.Row(r)) == 0.0) ++count;
  }
  return count;
}

// Scales rows so that every norm is at most 1 - 1e-6. Idempotent.
inline SampleSet Normalize(const SampleSet& samples, NormMode mode,
                           NormalizeScope scope = NormalizeScope::kGlobal) {
  SampleSet out = samples;
  const size_t n = out.size();
  const double tolerance = kNormGuard * (1.0 + 1e-12);
  if (scope == NormalizeScope::kGlobal) {
    double peak = 0.0;
    for (size_t r = 0; r < n; ++r) peak = std::max(peak, Norm(out.x.Row(r), mode));
    if (peak <= tolerance) return out;
    const double factor = kNormGuard / peak;
    for (double& v : out.x.data) v *= factor;
    return out;
  }
  for (size_t r = 0; r < n; ++r) {
    auto row = out.x.Row(r);
    const double norm = Norm(row, mode);
    if (norm <= tolerance) continue;
    const double factor = kNormGuard / norm;
    for (double& v : row) v *= factor;
  }
  return out;
}

// Pair (a, b) of a sample set: delta_x = x_a - x_b, y = 1 iff labels differ.
inline PairwiseDatum MakePair(const SampleSet& s, size_t a, size_t b) {
  PairwiseDatum p{s.ids.at(a), s.ids.at(b), std::vector<double>(s.dimension()),
                  s.labels.at(a) == s.labels.at(b) ? 0 : 1};
  for (size_t k = 0; k < s.dimension(); ++k) p.delta_x[k] = s.x(a, k) - s.x(b, k);
  return p;
}

// Uniformly samples distinct unordered pairs among `pool` (all rows when
// empty) until |E| = round(density * |V|), |V| counting individuals that
// appear in a sampled pair. With `balance`, draws alternate between y = 0 and
// y = 1 so both labels end with equal counts.
inline std::vector<PairwiseDatum> SamplePairs(const SampleSet& samples,
                                              double density, bool balance,
                                              uint64_t seed,
                                              std::vector<size_t> pool = {}) {
  samples.Validate();
  if (pool.empty()) {
    pool.resize(samples.size());
    std::iota(pool.begin(), pool.end(), size_t{0});
  }
  const size_t n = pool.size();
  if (!(density > 0.0) || n < 2 ||
      density > static_cast<double>(n - 1) / 2.0) {
    throw Error(ErrorCode::kInfeasibleDensity,
                "density " + std::to_string(density) + " with " +
                    std::to_string(n) + " individuals");
  }
  const uint64_t total = static_cast<uint64_t>(n) * (n - 1) / 2;
  uint64_t same_total = 0;
  {
    std::map<int, uint64_t> per_class;
    for (size_t idx : pool) ++per_class[samples.labels[idx]];
    for (const auto& [label, count] : per_class) {
      same_total += count * (count - 1) / 2;
    }
  }
  const uint64_t available[2] = {same_total, total - same_total};
  if (balance && (available[0] == 0 || available[1] == 0)) {
    throw Error(ErrorCode::kInfeasibleBalance,
                "both similar and dissimilar pairs are required");
  }

  Rng rng(seed);
  std::unordered_set<uint64_t> used;
  std::vector<int> touched(n, 0);
  uint64_t used_by_label[2] = {0, 0};
  size_t vertices = 0;
  std::vector<PairwiseDatum> pairs;
  while (true) {
    const int want = static_cast<int>(pairs.size() % 2);
    if (balance && used_by_label[want] == available[want]) {
      throw Error(ErrorCode::kInfeasibleBalance,
                  "ran out of pairs with y = " + std::to_string(want));
    }
    if (!balance && used.size() == total) {
      throw Error(ErrorCode::kInfeasibleDensity,
                  "all pairs used before reaching the density");
    }
    size_t a = rng.UniformInt(n);
    size_t b = rng.UniformInt(n);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const uint64_t key = static_cast<uint64_t>(a) * n + b;
    if (used.contains(key)) continue;
    const int y =
        samples.labels[pool[a]] == samples.labels[pool[b]] ? 0 : 1;
    if (balance && y != want) continue;
    used.insert(key);
    ++used_by_label[y];
    for (size_t v : {a, b}) {
      if (touched[v]++ == 0) ++vertices;
    }
    pairs.push_back(MakePair(samples, pool[a], pool[b]));
    const auto target =
        std::lround(density * static_cast<double>(vertices));
    if (static_cast<long>(pairs.size()) >= target &&
        (!balance || pairs.size() % 2 == 0)) {
      break;
    }
  }
  return pairs;
}

// SamplePairs restricted to a random `pool_fraction` of the individuals, so
// that the remaining ones stay out of every pair.
inline std::vector<PairwiseDatum> SamplePairsFromPool(const SampleSet& samples,
                                                      double density,
                                                      double pool_fraction,
                                                      bool balance,
                                                      uint64_t seed) {
  if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pool fraction must lie in (0, 1]");
  }
  std::vector<size_t> pool(samples.size());
  std::iota(pool.begin(), pool.end(), size_t{0});
  Rng rng = Rng(seed).Split(1);
  rng.Shuffle(pool);
  pool.resize(static_cast<size_t>(
      std::llround(pool_fraction * static_cast<double>(samples.size()))));
  std::sort(pool.begin(), pool.end());
  return SamplePairs(samples, density, balance, Mix64(seed), std::move(pool));
}

// Acyclic toy selection: `intra_per_class` similar pairs inside each of the
// classes 0 and 1, drawn uniformly, plus `inter` dissimilar pairs that join a
// random class-0 individual to its nearest class-1 individual. Every pair is
// restricted to those keeping the graph a forest, so kappa = 1.
inline std::vector<PairwiseDatum> SampleToyPairs(const SampleSet& samples,
                                                 size_t intra_per_class,
                                                 size_t inter, uint64_t seed) {
  samples.Validate();
  const size_t n = samples.size();
  std::vector<size_t> parent(n);
  std::iota(parent.begin(), parent.end(), size_t{0});
  auto find = [&](size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<size_t> members[2];
  for (size_t k = 0; k < n; ++k) {
    const int label = samples.labels[k];
    if (label == 0 || label == 1) members[label].push_back(k);
  }
  Rng rng(seed);
  std::vector<PairwiseDatum> pairs;
  // Draws one forest-preserving pair from members[ca] x members[cb].
  auto draw = [&](int ca, int cb) {
    const auto& left = members[ca];
    const auto& right = members[cb];
    if (left.empty() || right.empty() || (ca == cb && left.size() < 2)) {
      throw Error(ErrorCode::kInfeasibleDensity, "class too small for toy pairs");
    }
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      const size_t a = left[rng.UniformInt(left.size())];
      const size_t b = right[rng.UniformInt(right.size())];
      const size_t ra = find(a);
      const size_t rb = find(b);
      if (ra == rb) continue;
      parent[ra] = rb;
      pairs.push_back(MakePair(samples, a, b));
      return;
    }
    throw Error(ErrorCode::kInfeasibleDensity, "no acyclic pair left");
  };
  for (int label : {0, 1}) {
    for (size_t k = 0; k < intra_per_class; ++k) draw(label, label);
  }
  if (members[0].empty() || members[1].empty()) {
    throw Error(ErrorCode::kInfeasibleDensity, "class too small for toy pairs");
  }
  std::vector<std::pair<double, size_t>> nearest;
  for (size_t k = 0; k < inter; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const size_t a = members[0][rng.UniformInt(members[0].size())];
      nearest.clear();
      for (size_t b : members[1]) {
        double sum = 0.0;
        for (size_t c = 0; c < samples.dimension(); ++c) {
          const double diff = samples.x(a, c) - samples.x(b, c);
          sum += diff * diff;
        }
        nearest.emplace_back(sum, b);
      }
      std::sort(nearest.begin(), nearest.end());
      for (const auto& [dist, b] : nearest) {
        const size_t ra = find(a);
        const size_t rb = find(b);
        if (ra == rb) continue;
        parent[ra] = rb;
        pairs.push_back(MakePair(samples, a, b));
        placed = true;
        break;
      }
    }
    if (!placed) throw Error(ErrorCode::kInfeasibleDensity, "no acyclic pair left");
  }
  return pairs;
}

// Subsamples every class down to the size of the smallest one; kept rows
// retain their original order.
inline SampleSet DownsampleMajority(const SampleSet& samples, uint64_t seed) {
  samples.Validate();
  std::map<int, std::vector<size_t>> by_class;
  for (size_t k = 0; k < samples.size(); ++k) {
    by_class[samples.labels[k]].push_back(k);
  }
  if (by_class.size() < 2) {
    throw Error(ErrorCode::kSingleClass, "need at least two classes");
  }
  size_t minority = samples.size();
  for (const auto& [label, rows] : by_class) minority = std::min(minority, rows.size());
  Rng rng(seed);
  std::vector<size_t> keep;
  for (auto& [label, rows] : by_class) {
    if (rows.size() > minority) {
      rng.Shuffle(rows);
      rows.resize(minority);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());
  return samples.Subset(keep);
}

// Individuals appearing in at least one pair (train) and the rest (test).
struct PairSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

inline PairSplit SplitByPairs(const SampleSet& samples,
                              std::span<const PairwiseDatum> pairs) {
  std::unordered_set<std::string> seen;
  for (const PairwiseDatum& p : pairs) {
    seen.insert(p.i);
    seen.insert(p.j);
  }
  PairSplit split;
  for (size_t k = 0; k < samples.size(); ++k) {
    (seen.contains(samples.ids[k]) ? split.train : split.test).push_back(k);
  }
  return split;
}

// ---------------------------------------------------------------------------
// CSV

namespace internal {

inline std::vector<std::string> SplitLine(std::string_view line, char delim) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t end = line.find(delim, start);
    std::string_view field = line.substr(start, end == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : end - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
      field.remove_prefix(1);
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' ||
                              field.back() == '\r')) {
      field.remove_suffix(1);
    }
    fields.emplace_back(field);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return fields;
}

inline std::optional<double> ParseDouble(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<int> ParseInt(std::string_view text) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<uint64_t> ParseU64(std::string_view text) {
  uint64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return value;
}

[[noreturn]] inline void ThrowParse(size_t row, size_t col,
                                    const std::string& what) {
  throw Error(ErrorCode::kParseError, "row " + std::to_string(row) +
                                          ", column " + std::to_string(col) +
                                          ": " + what);
}

inline bool IsBlank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

inline std::ifstream OpenInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return in;
}

}  // namespace internal

// Shortest representation that round-trips.
inline std::string FormatDouble(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct CsvSchema {
  std::string label_column = "label";
  std::string id_column = "id";  // optional; row numbers are used if absent
  char delimiter = ',';
};

// Header row required; every column other than id and label is a numeric
// feature. Rows and columns in errors are 1-based, the header being row 1.
inline SampleSet ParseSamplesCsv(std::istream& in, const CsvSchema& schema = {}) {
  std::string line;
  size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (internal::IsBlank(line)) continue;
    header = internal::SplitLine(line, schema.delimiter);
    break;
  }
  if (header.empty()) {
    throw Error(ErrorCode::kMissingLabelColumn, "empty samples file");
  }
  std::optional<size_t> label_col;
  std::optional<size_t> id_col;
  std::vector<size_t> feature_cols;
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column && !label_col) {
      label_col = c;
    } else if (header[c] == schema.id_column && !id_col) {
      id_col = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (!label_col) {
    throw Error(ErrorCode::kMissingLabelColumn,
                "no column named '" + schema.label_column + "'");
  }
  SampleSet s;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (internal::IsBlank(line)) continue;
    const auto fields = internal::SplitLine(line, schema.delimiter);
    if (fields.size() != header.size()) {
      internal::ThrowParse(row, std::min(fields.size(), header.size()) + 1,
                           "expected " + std::to_string(header.size()) +
                               " fields, found " + std::to_string(fields.size()));
    }
    const auto label = internal::ParseInt(fields[*label_col]);
    if (!label) internal::ThrowParse(row, *label_col + 1, "label is not an integer");
    for (size_t c : feature_cols) {
      const auto v = internal::ParseDouble(fields[c]);
      if (!v || !std::isfinite(*v)) {
        internal::ThrowParse(row, c + 1, "'" + fields[c] + "' is not a number");
      }
      values.push_back(*v);
    }
    s.labels.push_back(*label);
    s.ids.push_back(id_col ? fields[*id_col] : std::to_string(s.labels.size() - 1));
  }
  s.x.rows = s.labels.size();
  s.x.cols = feature_cols.size();
  s.x.data = std::move(values);
  std::unordered_set<std::string> unique(s.ids.begin(), s.ids.end());
  if (unique.size() != s.ids.size()) {
    throw Error(ErrorCode::kParseError, "duplicate ids in samples file");
  }
  return s;
}

inline SampleSet LoadSamplesCsv(const std::string& path,
                                const CsvSchema& schema = {}) {
  auto in = internal::OpenInput(path);
  return ParseSamplesCsv(in, schema);
}

inline void WriteSamplesCsv(std::ostream& out, const SampleSet& s) {
  out << "id,label";
  for (size_t k = 0; k < s.dimension(); ++k) out << ",f" << (k + 1);
  out << '\n';
  for (size_t r = 0; r < s.size(); ++r) {
    out << s.ids[r] << ',' << s.labels[r];
    for (double v : s.x.Row(r)) out << ',' << FormatDouble(v);
    out << '\n';
  }
}

// Rows `i, j, y, dx_1, ..., dx_d`; a first row whose y field is not an
// integer is taken as a header.
inline std::vector<PairwiseDatum> ParsePairsCsv(std::istream& in,
                                                char delimiter = ',') {
  std::vector<PairwiseDatum> pairs;
  std::string line;
  size_t row = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row;
    if (internal::IsBlank(line)) continue;
    const auto fields = internal::SplitLine(line, delimiter);
    if (first) {
      first = false;
      if (fields.size() >= 3 && !internal::ParseInt(fields[2])) continue;
    }
    if (fields.size() < 3) internal::ThrowParse(row, fields.size() + 1, "too few fields");
    const auto y = internal::ParseInt(fields[2]);
    if (!y || (*y != 0 && *y != 1)) internal::ThrowParse(row, 3, "y must be 0 or 1");
    PairwiseDatum p{fields[0], fields[1], {}, *y};
    for (size_t c = 3; c < fields.size(); ++c) {
      const auto v = internal::ParseDouble(fields[c]);
      if (!v || !std::isfinite(*v)) {
        internal::ThrowParse(row, c + 1, "'" + fields[c] + "' is not a number");
      }
      p.delta_x.push_back(*v);
    }
    if (!pairs.empty() && p.delta_x.size() != pairs.front().delta_x.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "row " + std::to_string(row) + " has " +
                      std::to_string(p.delta_x.size()) + " features");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline std::vector<PairwiseDatum> LoadPairsCsv(const std::string& path,
                                               char delimiter = ',') {
  auto in = internal::OpenInput(path);
  return ParsePairsCsv(in, delimiter);
}

inline void WritePairsCsv(std::ostream& out, std::span<const PairwiseDatum> pairs,
                          char delimiter = ',') {
  const size_t d = pairs.empty() ? 0 : pairs.front().delta_x.size();
  out << 'i' << delimiter << 'j' << delimiter << 'y';
  for (size_t k = 0; k < d; ++k) out << delimiter << "dx" << (k + 1);
  out << '\n';
  for (const PairwiseDatum& p : pairs) {
    out << p.i << delimiter << p.j << delimiter << p.y;
    for (double v : p.delta_x) out << delimiter << FormatDouble(v);
    out << '\n';
  }
}

}  // namespace dppml

#endif  // DPPML_DATAIO_HPP_
