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

#ifndef DPPML_COMMON_HPP_
#define DPPML_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dppml {

enum class ErrorCode {
  kInvalidArgument,
  kDuplicateEdge,
  kSelfLoop,
  kDimensionMismatch,
  kUnknownNode,
  kMissingEdge,
  kSameNode,
  kGraphTooLarge,
  kNonPositiveScale,
  kDeltaZero,
  kInvalidGamma,
  kOutOfRange,
  kDegenerateDistance,
  kEmptyBatch,
  kConfigInvalid,
  kEmptyTrainSet,
  kInfeasibleDensity,
  kInfeasibleBalance,
  kSingleClass,
  kParseError,
  kMissingLabelColumn,
  kZeroRow,
  kIo,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDuplicateEdge: return "DuplicateEdge";
    case ErrorCode::kSelfLoop: return "SelfLoop";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kMissingEdge: return "MissingEdge";
    case ErrorCode::kSameNode: return "SameNode";
    case ErrorCode::kGraphTooLarge: return "GraphTooLarge";
    case ErrorCode::kNonPositiveScale: return "NonPositiveScale";
    case ErrorCode::kDeltaZero: return "DeltaZero";
    case ErrorCode::kInvalidGamma: return "InvalidGamma";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDegenerateDistance: return "DegenerateDistance";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kEmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::kInfeasibleDensity: return "InfeasibleDensity";
    case ErrorCode::kInfeasibleBalance: return "InfeasibleBalance";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingLabelColumn: return "MissingLabelColumn";
    case ErrorCode::kZeroRow: return "ZeroRow";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

// All library failures are reported through this exception type; `code()`
// identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class NormMode { kL1, kL2 };

inline double L1Norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += std::abs(x);
  return sum;
}

inline double L2Norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

inline double Norm(std::span<const double> v, NormMode mode) {
  return mode == NormMode::kL1 ? L1Norm(v) : L2Norm(v);
}

inline double Dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

inline bool IsInfinite(double x) { return std::isinf(x) && x > 0; }

// Dense row-major matrix.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<double> Row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> Row(size_t r) const {
    return {data.data() + r * cols, cols};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// SplitMix64 finalizer; used to derive independent substream seeds.
inline uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator with platform-independent variates. The standard
// distributions are implementation-defined, so every transform from raw
// 64-bit words is done here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(Mix64(seed)) {}

  uint64_t seed() const { return seed_; }

  // Substream derived from the seed and a stream id only, independent of how
  // much of this generator has been consumed.
  Rng Split(uint64_t stream) const {
    return Rng(Mix64(seed_ ^ Mix64(stream + 0x632be59bd9b4e019ULL)));
  }

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1).
  double UniformOpen() {
    double u;
    do {
      u = Uniform01();
    } while (u == 0.0);
    return u;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Unbiased integer in [0, n).
  uint64_t UniformInt(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                           std::numeric_limits<uint64_t>::max() % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool Bernoulli(double p) { return Uniform01() < p; }

  // Standard normal via Box-Muller (no cached second variate).
  double Normal() {
    const double u1 = UniformOpen();
    const double u2 = Uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dppml

#endif  // DPPML_COMMON_HPP_
