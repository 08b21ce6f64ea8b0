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

#ifndef DPPML_MECHANISMS_HPP_
#define DPPML_MECHANISMS_HPP_

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/pairgraph.hpp"

namespace dppml {

enum class Mechanism { kNone, kLaplace, kGaussian, kStaircase, kDuchi };

inline std::string_view MechanismName(Mechanism m) {
  switch (m) {
    case Mechanism::kNone: return "none";
    case Mechanism::kLaplace: return "laplace";
    case Mechanism::kGaussian: return "gaussian";
    case Mechanism::kStaircase: return "staircase";
    case Mechanism::kDuchi: return "duchi";
  }
  return "unknown";
}

inline Mechanism ParseMechanism(std::string_view name) {
  if (name == "none" || name == "nonpriv") return Mechanism::kNone;
  if (name == "laplace" || name == "lap") return Mechanism::kLaplace;
  if (name == "gaussian") return Mechanism::kGaussian;
  if (name == "staircase" || name == "scdf") return Mechanism::kStaircase;
  if (name == "duchi") return Mechanism::kDuchi;
  throw Error(ErrorCode::kConfigInvalid,
              "unknown mechanism '" + std::string(name) + "'");
}

// Total budget for a training run. Each epoch spends epsilon / t_max; with
// disjoint batches an epoch touches every pair once, so epochs compose
// sequentially to the full epsilon.
struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 0.0;
  int kappa = 1;
  int t_max = 1;

  double per_epoch_epsilon() const { return epsilon / t_max; }
  bool approximate() const { return delta > 0.0; }

  void Validate() const {
    if (!(epsilon > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "epsilon must be positive");
    }
    if (!(delta >= 0.0 && delta < 1.0)) {
      throw Error(ErrorCode::kConfigInvalid, "delta must lie in [0, 1)");
    }
    if (kappa < 0) throw Error(ErrorCode::kConfigInvalid, "kappa must be >= 0");
    if (t_max < 1) throw Error(ErrorCode::kConfigInvalid, "t_max must be >= 1");
  }
};

// Charges the per-epoch budget once per completed epoch.
class EpochAccountant {
 public:
  explicit EpochAccountant(const PrivacyBudget& budget) : budget_(budget) {}

  void ChargeEpoch() {
    if (epochs_ >= budget_.t_max) {
      throw Error(ErrorCode::kConfigInvalid, "all epochs already charged");
    }
    ++epochs_;
  }

  int epochs() const { return epochs_; }

  double spent() const {
    if (epochs_ == budget_.t_max) return budget_.epsilon;
    return budget_.per_epoch_epsilon() * epochs_;
  }

  double remaining() const { return budget_.epsilon - spent(); }

 private:
  PrivacyBudget budget_;
  int epochs_ = 0;
};

// Zero-mean Laplace variate with scale b (variance 2 b^2), by inversion.
inline double LaplaceSample(double scale, Rng& rng) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kNonPositiveScale, std::to_string(scale));
  }
  const double u = rng.UniformOpen() - 0.5;
  return -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
}

inline double GaussianSample(double sigma, Rng& rng) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::kNonPositiveScale, std::to_string(sigma));
  }
  return sigma * rng.Normal();
}

// Smallest sigma with sigma >= sqrt(2 ln(1.25 / delta)) * sensitivity / epsilon.
inline double GaussianSigma(double epsilon, double delta, double sensitivity) {
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::kDeltaZero, "the Gaussian mechanism needs delta > 0");
  }
  if (!(epsilon > 0.0) || !(sensitivity > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "epsilon and sensitivity must be positive");
  }
  return std::sqrt(2.0 * std::log(1.25 / delta)) * sensitivity / epsilon;
}

// Calibrated to the per-epoch share of the budget.
inline double GaussianSigma(const PrivacyBudget& budget, double sensitivity) {
  return GaussianSigma(budget.per_epoch_epsilon(), budget.delta, sensitivity);
}

namespace internal {

inline void CheckStaircase(double epsilon, double sensitivity, double gamma) {
  if (!(epsilon > 0.0) || !(sensitivity > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "staircase epsilon and sensitivity must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidGamma, std::to_string(gamma));
  }
}

}  // namespace internal

// Staircase density: constant on [0, gamma*D), then alternating stairs whose
// height drops by e^-epsilon every half-step; mirrored for negative values.
// Sampled as sign * (geometric stair index + position within the stair).
inline double StaircaseSample(double epsilon, double sensitivity, double gamma,
                              Rng& rng) {
  internal::CheckStaircase(epsilon, sensitivity, gamma);
  const double b = std::exp(-epsilon);
  const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
  const double stair = std::floor(std::log(rng.UniformOpen()) / -epsilon);
  const double u = rng.Uniform01();
  const double p_inner = gamma / (gamma + (1.0 - gamma) * b);
  double offset;
  if (rng.Uniform01() < p_inner) {
    offset = stair + gamma * u;
  } else {
    offset = stair + gamma + (1.0 - gamma) * u;
  }
  return sign * offset * sensitivity;
}

// Closed-form second moment of StaircaseSample.
inline double StaircaseVariance(double epsilon, double sensitivity,
                                double gamma) {
  internal::CheckStaircase(epsilon, sensitivity, gamma);
  const double b = std::exp(-epsilon);
  const double eg = b / (1.0 - b);
  const double eg2 = b * (1.0 + b) / ((1.0 - b) * (1.0 - b));
  const double p_inner = gamma / (gamma + (1.0 - gamma) * b);
  const double inner = eg2 + gamma * eg + gamma * gamma / 3.0;
  const double outer = eg2 + eg * (1.0 + gamma) + gamma * gamma +
                       gamma * (1.0 - gamma) +
                       (1.0 - gamma) * (1.0 - gamma) / 3.0;
  return sensitivity * sensitivity *
         (p_inner * inner + (1.0 - p_inner) * outer);
}

// Variance-minimising stair ratio, found by golden-section search on (0, 1].
inline double OptimalStaircaseGamma(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 1e-9;
  double hi = 1.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = StaircaseVariance(epsilon, 1.0, x1);
  double f2 = StaircaseVariance(epsilon, 1.0, x2);
  for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = StaircaseVariance(epsilon, 1.0, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = StaircaseVariance(epsilon, 1.0, x2);
    }
  }
  const double best = 0.5 * (lo + hi);
  return StaircaseVariance(epsilon, 1.0, 1.0) <
                 StaircaseVariance(epsilon, 1.0, best)
             ? 1.0
             : best;
}

// Output magnitude of the one-bit randomizer: (e^eps + 1) / (e^eps - 1).
inline double DuchiMagnitude(double epsilon) {
  if (IsInfinite(epsilon)) return 1.0;
  return (std::exp(epsilon) + 1.0) / std::expm1(epsilon);
}

// Variance of DuchiRandomize at input `value`: C^2 - value^2.
inline double DuchiVariance(double epsilon, double value = 0.0) {
  const double c = DuchiMagnitude(epsilon);
  return c * c - value * value;
}

// Unbiased one-bit randomizer for value in [-1, 1]: returns +C or -C.
inline double DuchiRandomize(double value, double epsilon, Rng& rng) {
  if (!(value >= -1.0 && value <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, std::to_string(value));
  }
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  const double c = DuchiMagnitude(epsilon);
  const double p_plus = 0.5 + 0.5 * value / c;
  return rng.Bernoulli(p_plus) ? c : -c;
}

// Probability that WarnerFlip keeps its input: e^eps / (1 + e^eps).
inline double WarnerKeepProbability(double epsilon) {
  if (IsInfinite(epsilon)) return 1.0;
  return 1.0 / (1.0 + std::exp(-epsilon));
}

// Randomized response on a binary label.
inline int WarnerFlip(int label, double epsilon, Rng& rng) {
  if (label != 0 && label != 1) {
    throw Error(ErrorCode::kInvalidArgument, "label must be 0 or 1");
  }
  if (!(epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  }
  return rng.Bernoulli(WarnerKeepProbability(epsilon)) ? label : 1 - label;
}

// Input-perturbation baseline. The feature share of the budget is split
// evenly over the d coordinates, each with sensitivity 2 (l1-normalized
// individuals); the label share drives randomized response.
inline std::vector<PairwiseDatum> InputPerturb(
    std::span<const PairwiseDatum> pairs, double epsilon, Rng& rng,
    double feature_share = 0.5) {
  if (!(epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  if (!(feature_share > 0.0 && feature_share < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "feature share must lie in (0, 1)");
  }
  const double eps_features = feature_share * epsilon;
  const double eps_labels = IsInfinite(epsilon) ? epsilon : epsilon - eps_features;
  std::vector<PairwiseDatum> out(pairs.begin(), pairs.end());
  for (PairwiseDatum& p : out) {
    const double d = static_cast<double>(p.delta_x.size());
    if (!IsInfinite(epsilon)) {
      const double scale = 2.0 * d / eps_features;
      for (double& x : p.delta_x) x += LaplaceSample(scale, rng);
    }
    p.y = WarnerFlip(p.y, eps_labels, rng);
  }
  return out;
}

// Additive noise description. For the staircase mechanism `scale_or_sigma`
// is the stair width (the sensitivity) and `epsilon` its budget.
struct NoiseSpec {
  Mechanism mechanism = Mechanism::kLaplace;
  double scale_or_sigma = 1.0;
  double staircase_gamma = 1.0;
  double epsilon = 1.0;
};

inline double SampleNoise(const NoiseSpec& spec, Rng& rng) {
  switch (spec.mechanism) {
    case Mechanism::kNone:
      return 0.0;
    case Mechanism::kLaplace:
      return LaplaceSample(spec.scale_or_sigma, rng);
    case Mechanism::kGaussian:
      return GaussianSample(spec.scale_or_sigma, rng);
    case Mechanism::kStaircase:
      return StaircaseSample(spec.epsilon, spec.scale_or_sigma,
                             spec.staircase_gamma, rng);
    case Mechanism::kDuchi:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "the Duchi randomizer is not additive noise");
}

}  // namespace dppml

#endif  // DPPML_MECHANISMS_HPP_
