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

// Contrastive-loss metric learning with per-minibatch gradient perturbation.

#ifndef DPPML_DML_HPP_
#define DPPML_DML_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/mechanisms.hpp"
#include "dppml/pairgraph.hpp"

namespace dppml {

// Transformation W (d' x d); the learned metric is M = W^T W.
struct MetricModel {
  Matrix w;

  size_t d_prime() const { return w.rows; }
  size_t d() const { return w.cols; }

  static MetricModel Identity(size_t d) {
    MetricModel m{Matrix(d, d)};
    for (size_t i = 0; i < d; ++i) m.w(i, i) = 1.0;
    return m;
  }

  Matrix Metric() const {
    Matrix m(d(), d());
    for (size_t a = 0; a < d(); ++a) {
      for (size_t b = 0; b < d(); ++b) {
        double sum = 0.0;
        for (size_t r = 0; r < d_prime(); ++r) sum += w(r, a) * w(r, b);
        m(a, b) = sum;
      }
    }
    return m;
  }
};

namespace internal {

inline void CheckDimensions(const MetricModel& model,
                            std::span<const double> delta_x) {
  if (delta_x.size() != model.d()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "pair has dimension " + std::to_string(delta_x.size()) +
                    ", model expects " + std::to_string(model.d()));
  }
}

// W * delta_x.
inline void Project(const Matrix& w, std::span<const double> delta_x,
                    std::span<double> out) {
  for (size_t r = 0; r < w.rows; ++r) out[r] = Dot(w.Row(r), delta_x);
}

// Scalar c with g_r = c * (W_r . dx) * dx, given the projected distance.
// Returns nullopt for the degenerate y = 1, D_W = 0 case.
inline std::optional<double> GradientCoefficient(int y, double distance,
                                                 double margin) {
  if (y == 0) return 1.0;
  if (distance >= margin) return 0.0;
  if (distance == 0.0) return std::nullopt;
  return (distance - margin) / distance;
}

}  // namespace internal

// D_W = ||W dx||_2.
inline double ProjectedDistance(const MetricModel& model,
                                std::span<const double> delta_x) {
  internal::CheckDimensions(model, delta_x);
  double sum = 0.0;
  for (size_t r = 0; r < model.d_prime(); ++r) {
    const double v = Dot(model.w.Row(r), delta_x);
    sum += v * v;
  }
  return std::sqrt(sum);
}

// 1/2 (1 - y) D_W^2 + 1/2 y max(0, m - D_W)^2.
inline double ContrastiveLoss(const MetricModel& model,
                              const PairwiseDatum& pair, double margin) {
  const double dist = ProjectedDistance(model, pair.delta_x);
  if (pair.y == 0) return 0.5 * dist * dist;
  const double hinge = std::max(0.0, margin - dist);
  return 0.5 * hinge * hinge;
}

// Mean contrastive loss over a pair list.
inline double Objective(const MetricModel& model,
                        std::span<const PairwiseDatum> pairs, double margin) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const PairwiseDatum& p : pairs) sum += ContrastiveLoss(model, p, margin);
  return sum / static_cast<double>(pairs.size());
}

// Gradient of the contrastive loss w.r.t. row r of W (length d).
inline std::vector<double> GradientRow(const MetricModel& model,
                                       const PairwiseDatum& pair,
                                       double margin, size_t r) {
  internal::CheckDimensions(model, pair.delta_x);
  if (r >= model.d_prime()) {
    throw Error(ErrorCode::kInvalidArgument,
                "row " + std::to_string(r) + " out of range");
  }
  const double dist = ProjectedDistance(model, pair.delta_x);
  const auto coef = internal::GradientCoefficient(pair.y, dist, margin);
  if (!coef) {
    throw Error(ErrorCode::kDegenerateDistance,
                "dissimilar pair projected to distance 0");
  }
  const double proj = *coef * Dot(model.w.Row(r), pair.delta_x);
  std::vector<double> g(pair.delta_x.size());
  for (size_t k = 0; k < g.size(); ++k) g[k] = proj * pair.delta_x[k];
  return g;
}

// g / max(1, ||g|| / h).
inline std::vector<double> ClipGradient(std::span<const double> g, double h,
                                        NormMode mode = NormMode::kL1) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "h must be positive");
  std::vector<double> out(g.begin(), g.end());
  const double norm = Norm(g, mode);
  if (norm > h) {
    const double scale = h / norm;
    for (double& x : out) x *= scale;
  }
  return out;
}

enum class SensitivityMode { kBasic, kReduced };

struct SensitivityBound {
  enum class Kind { kBasic, kReduced, kReducedL2 };
  std::vector<double> per_row;
  Kind kind = Kind::kBasic;
};

// 2 kappa h / |B| for every row.
inline SensitivityBound SensitivityBasic(int kappa, double h, size_t batch_size,
                                         size_t d_prime = 1) {
  if (kappa <= 0 || !(h > 0.0) || batch_size == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "kappa, h and batch size must be positive");
  }
  const double value = 2.0 * kappa * h / static_cast<double>(batch_size);
  return {std::vector<double>(d_prime, value), SensitivityBound::Kind::kBasic};
}

// Bound on any single clipped per-pair gradient for row r that a neighbouring
// batch could contain: min{h, max(4||W_r||, 2m sqrt(d'))} in l1,
// min{h, max(4||W_r||_2, 2m)} in l2.
inline double GradientCounterpartBound(std::span<const double> w_row, double h,
                                       double margin, size_t d_prime,
                                       NormMode mode) {
  const double pair_bound =
      mode == NormMode::kL1
          ? 2.0 * margin * std::sqrt(static_cast<double>(d_prime))
          : 2.0 * margin;
  return std::min(h, std::max(4.0 * Norm(w_row, mode), pair_bound));
}

// Reduced sensitivity of one row: kappa (g' + g'') / |B| with g' the largest
// clipped gradient norm in the batch.
inline double SensitivityReducedRow(
    std::span<const std::vector<double>> clipped_grads,
    std::span<const double> w_row, double h, double margin, size_t d_prime,
    int kappa, size_t batch_size, NormMode mode) {
  if (clipped_grads.empty() || batch_size == 0) {
    throw Error(ErrorCode::kEmptyBatch, "no gradients in batch");
  }
  double peak = 0.0;
  for (const auto& g : clipped_grads) peak = std::max(peak, Norm(g, mode));
  const double counterpart =
      GradientCounterpartBound(w_row, h, margin, d_prime, mode);
  return kappa * (peak + counterpart) / static_cast<double>(batch_size);
}

// Per-row reduced bound for a whole model; `clipped[r]` holds the batch's
// clipped gradients of row r.
inline SensitivityBound SensitivityReduced(
    std::span<const std::vector<std::vector<double>>> clipped,
    const MetricModel& model, double h, double margin, int kappa,
    size_t batch_size, NormMode mode) {
  SensitivityBound bound;
  bound.kind = mode == NormMode::kL1 ? SensitivityBound::Kind::kReduced
                                     : SensitivityBound::Kind::kReducedL2;
  for (size_t r = 0; r < model.d_prime(); ++r) {
    bound.per_row.push_back(SensitivityReducedRow(
        clipped[r], model.w.Row(r), h, margin, model.d_prime(), kappa,
        batch_size, mode));
  }
  return bound;
}

// eta_0 / sqrt(tau) with eta_0 = 1.
inline double StepSize(long tau) {
  if (tau < 1) throw Error(ErrorCode::kInvalidArgument, "tau must be >= 1");
  return 1.0 / std::sqrt(static_cast<double>(tau));
}

enum class BatchMode { kShuffled, kComponent };

struct TrainConfig {
  size_t d_prime = 2;
  std::optional<double> margin;  // derived from the data when unset
  double margin_ratio = 1.0;
  double lipschitz = 0.5;
  size_t batch_size = 30;
  PrivacyBudget budget;  // budget.t_max is the epoch count
  Mechanism mechanism = Mechanism::kLaplace;
  std::optional<double> staircase_gamma;  // variance-optimal when unset
  SensitivityMode sensitivity_mode = SensitivityMode::kReduced;
  NormMode norm_mode = NormMode::kL1;
  BatchMode batch_mode = BatchMode::kShuffled;
  uint64_t seed = 1;
  double init_scale = 0.1;

  void Validate() const {
    if (d_prime < 1) throw Error(ErrorCode::kConfigInvalid, "d_prime must be >= 1");
    if (margin && !(*margin > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "margin must be positive");
    }
    if (!(margin_ratio > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "margin_ratio must be positive");
    }
    if (!(lipschitz > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "lipschitz must be positive");
    }
    if (batch_size < 1) {
      throw Error(ErrorCode::kConfigInvalid, "batch_size must be >= 1");
    }
    if (!(init_scale > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid, "init_scale must be positive");
    }
    if (staircase_gamma && !(*staircase_gamma > 0.0 && *staircase_gamma <= 1.0)) {
      throw Error(ErrorCode::kInvalidGamma, std::to_string(*staircase_gamma));
    }
    budget.Validate();
    if (mechanism != Mechanism::kNone && budget.kappa < 1) {
      throw Error(ErrorCode::kConfigInvalid,
                  "kappa must be >= 1 for private training");
    }
    if (mechanism == Mechanism::kGaussian && !budget.approximate()) {
      throw Error(ErrorCode::kDeltaZero, "the Gaussian mechanism needs delta > 0");
    }
  }
};

struct TraceRow {
  long iter = 0;
  int epoch = 0;
  double objective = 0.0;
  double eta = 0.0;
  double sens_basic = 0.0;
  double sens_reduced_min = 0.0;
  double sens_reduced_max = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;  // rows[0] is the initial state (iter 0)
  double margin = 0.0;
  long degenerate_events = 0;
  std::vector<std::vector<double>> reduced_per_row;  // [iter-1][r]
};

struct TrainResult {
  MetricModel model;
  TrainTrace trace;
};

// m = rho / K_N * sum of ||dx|| over dissimilar pairs.
inline double DefaultMargin(std::span<const PairwiseDatum> pairs, double ratio,
                            NormMode mode) {
  double sum = 0.0;
  size_t count = 0;
  for (const PairwiseDatum& p : pairs) {
    if (p.y != 1) continue;
    sum += Norm(p.delta_x, mode);
    ++count;
  }
  if (count == 0 || !(sum > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid,
                "cannot derive a margin without dissimilar pairs");
  }
  return ratio * sum / static_cast<double>(count);
}

// Disjoint batches of pair indices. The pair order is shuffled once; in
// component mode pairs are additionally grouped by graph component. A final
// partial batch is kept only if it holds at least half a batch.
inline std::vector<std::vector<size_t>> MakeBatches(
    std::span<const PairwiseDatum> pairs, const PairGraph& graph,
    size_t batch_size, BatchMode mode, Rng& rng) {
  std::vector<size_t> order(pairs.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = k;
  rng.Shuffle(order);
  if (mode == BatchMode::kComponent) {
    std::vector<int> label;
    internal::LabelComponents(graph, label);
    std::vector<int> comp(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
      comp[k] = label[graph.IndexOf(pairs[k].i)];
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return comp[a] < comp[b]; });
  }
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    const size_t end = std::min(order.size(), start + batch_size);
    if (end - start < batch_size && 2 * (end - start) < batch_size &&
        !batches.empty()) {
      break;
    }
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

namespace internal {

inline constexpr uint64_t kInitStream = 1;
inline constexpr uint64_t kShuffleStream = 2;
inline constexpr uint64_t kNoiseStreamBase = 1000;

// Perturbs one row's mean gradient in place. `sensitivity` already includes
// kappa; the budget spent per batch is the per-epoch epsilon.
inline void PerturbRow(std::span<double> mean, double sensitivity, double h,
                       const TrainConfig& config, double gamma, Rng& rng) {
  const double eps = config.budget.per_epoch_epsilon();
  switch (config.mechanism) {
    case Mechanism::kNone:
      return;
    case Mechanism::kLaplace: {
      if (IsInfinite(eps)) return;
      const double scale = sensitivity / eps;
      for (double& x : mean) x += LaplaceSample(scale, rng);
      return;
    }
    case Mechanism::kGaussian: {
      if (IsInfinite(eps)) return;
      const double sigma = GaussianSigma(eps, config.budget.delta, sensitivity);
      for (double& x : mean) x += GaussianSample(sigma, rng);
      return;
    }
    case Mechanism::kStaircase: {
      if (IsInfinite(eps)) return;
      for (double& x : mean) x += StaircaseSample(eps, sensitivity, gamma, rng);
      return;
    }
    case Mechanism::kDuchi: {
      // Each coordinate of the mean lies in [-h, h]; randomize it on the unit
      // interval with an even share of the budget, then rescale.
      const double eps_coord =
          IsInfinite(eps) ? eps : eps / static_cast<double>(mean.size());
      for (double& x : mean) {
        const double v = std::clamp(x / h, -1.0, 1.0);
        x = h * DuchiRandomize(v, eps_coord, rng);
      }
      return;
    }
  }
}

}  // namespace internal

// Private minibatch gradient descent on the contrastive loss. Every step uses
// the current W for all rows; each row is clipped, bounded, perturbed and
// updated independently with its own noise substream.
inline TrainResult Train(std::span<const PairwiseDatum> pairs,
                         const PairGraph& graph, const TrainConfig& config) {
  config.Validate();
  if (pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "no training pairs");
  const size_t d = pairs.front().delta_x.size();
  for (const PairwiseDatum& p : pairs) {
    if (p.delta_x.size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "pairs differ in dimension");
    }
  }
  if (config.d_prime > d) {
    throw Error(ErrorCode::kConfigInvalid, "d_prime exceeds the data dimension");
  }

  const Rng master(config.seed);
  Rng init_rng = master.Split(internal::kInitStream);
  Rng shuffle_rng = master.Split(internal::kShuffleStream);
  std::vector<Rng> noise_rng;
  for (size_t r = 0; r < config.d_prime; ++r) {
    noise_rng.push_back(master.Split(internal::kNoiseStreamBase + r));
  }

  TrainResult result;
  MetricModel& model = result.model;
  model.w = Matrix(config.d_prime, d);
  for (double& x : model.w.data) {
    x = init_rng.Uniform(-config.init_scale, config.init_scale);
  }
  const double margin =
      config.margin ? *config.margin
                    : DefaultMargin(pairs, config.margin_ratio, config.norm_mode);
  result.trace.margin = margin;

  const double h = config.lipschitz;
  const int kappa = std::max(config.budget.kappa, 1);
  double gamma = 1.0;
  if (config.mechanism == Mechanism::kStaircase &&
      !IsInfinite(config.budget.per_epoch_epsilon())) {
    gamma = config.staircase_gamma
                ? *config.staircase_gamma
                : OptimalStaircaseGamma(config.budget.per_epoch_epsilon());
  }

  const auto batches = MakeBatches(pairs, graph, config.batch_size,
                                   config.batch_mode, shuffle_rng);
  result.trace.rows.push_back({0, 0, Objective(model, pairs, margin), 0.0, 0.0,
                               0.0, 0.0});

  std::vector<double> projected(config.d_prime);
  std::vector<double> coefficients;
  std::vector<std::vector<double>> clipped;
  std::vector<double> mean(d);
  long tau = 0;
  for (int epoch = 1; epoch <= config.budget.t_max; ++epoch) {
    for (const auto& batch : batches) {
      ++tau;
      const double eta = StepSize(tau);
      const Matrix snapshot = model.w;
      const size_t batch_size = batch.size();

      // Per-pair coefficient c with g_r = c (W_r . dx) dx, shared by all rows.
      coefficients.assign(batch_size, 0.0);
      for (size_t j = 0; j < batch_size; ++j) {
        const PairwiseDatum& p = pairs[batch[j]];
        internal::Project(snapshot, p.delta_x, projected);
        const double dist = L2Norm(projected);
        const auto coef = internal::GradientCoefficient(p.y, dist, margin);
        if (!coef) ++result.trace.degenerate_events;
        coefficients[j] = coef.value_or(0.0);
      }

      const double basic = 2.0 * kappa * h / static_cast<double>(batch_size);
      TraceRow row{tau, epoch, 0.0, eta, basic,
                   std::numeric_limits<double>::infinity(), 0.0};
      std::vector<double> reduced_rows(config.d_prime);
      for (size_t r = 0; r < config.d_prime; ++r) {
        const auto w_row = snapshot.Row(r);
        clipped.assign(batch_size, std::vector<double>(d));
        std::fill(mean.begin(), mean.end(), 0.0);
        for (size_t j = 0; j < batch_size; ++j) {
          const PairwiseDatum& p = pairs[batch[j]];
          const double scale = coefficients[j] * Dot(w_row, p.delta_x);
          for (size_t k = 0; k < d; ++k) clipped[j][k] = scale * p.delta_x[k];
          const double norm = Norm(clipped[j], config.norm_mode);
          if (norm > h) {
            for (double& x : clipped[j]) x *= h / norm;
          }
          for (size_t k = 0; k < d; ++k) mean[k] += clipped[j][k];
        }
        for (double& x : mean) x /= static_cast<double>(batch_size);

        const double reduced = SensitivityReducedRow(
            clipped, w_row, h, margin, config.d_prime, kappa, batch_size,
            config.norm_mode);
        reduced_rows[r] = reduced;
        row.sens_reduced_min = std::min(row.sens_reduced_min, reduced);
        row.sens_reduced_max = std::max(row.sens_reduced_max, reduced);

        const double sensitivity =
            config.sensitivity_mode == SensitivityMode::kReduced ? reduced
                                                                 : basic;
        internal::PerturbRow(mean, sensitivity, h, config, gamma, noise_rng[r]);
        auto target = model.w.Row(r);
        for (size_t k = 0; k < d; ++k) target[k] -= eta * mean[k];
      }
      row.objective = Objective(model, pairs, margin);
      result.trace.rows.push_back(row);
      result.trace.reduced_per_row.push_back(std::move(reduced_rows));
    }
  }
  return result;
}

}  // namespace dppml

#endif  // DPPML_DML_HPP_
