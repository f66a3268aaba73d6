// Copyright 2026 The recistkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Keypoint focal loss and smooth-L1 offset loss with analytic gradients,
// plus a central-difference gradient checker.

#include <cmath>
#include <functional>
#include <limits>
#include <type_traits>
#include <stdexcept>

#include "recist/targets.hpp"
#include "recist/types.hpp"

namespace recist {

struct FocalParams {
  double alpha = 2.0;
  double beta = 4.0;
  double clamp_eps = 1e-12;

  void validate() const {
    if (!(alpha > 0) || !(beta >= 0) || !(clamp_eps > 0) || !(clamp_eps < 0.5))
      throw std::invalid_argument("FocalParams: require alpha > 0, beta >= 0, 0 < clamp_eps < 0.5");
  }
};

namespace detail {

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// An image without objects normalizes by 1.
inline double normalizer(int n_objects) { return n_objects >= 1 ? double(n_objects) : 1.0; }

}  // namespace detail

/// Penalty-reduced pixel-wise focal loss. Cells with target exactly 1 are
/// positives; every other cell (including Gaussian shoulders) is a negative
/// down-weighted by (1 - target)^beta. Predictions are clamped to
/// [eps, 1 - eps] before the logarithms.
template <typename Derived1, typename Derived2>
typename Derived1::Scalar focal_loss(const Eigen::ArrayBase<Derived1>& pred, const Eigen::ArrayBase<Derived2>& target,
                                     int n_objects, const FocalParams& p = {}) {
  using Scalar = typename Derived1::Scalar;
  p.validate();
  detail::require_same_shape(pred, target, "focal_loss");
  const Scalar eps = static_cast<Scalar>(p.clamp_eps);
  const Scalar alpha = static_cast<Scalar>(p.alpha);
  const Scalar beta = static_cast<Scalar>(p.beta);

  const auto y = pred.derived().cwiseMax(eps).cwiseMin(Scalar(1) - eps);
  const auto pos = (Scalar(1) - y).pow(alpha) * y.log();
  const auto neg = (Scalar(1) - target.derived()).pow(beta) * y.pow(alpha) * (Scalar(1) - y).log();
  const Scalar total = (target.derived() == Scalar(1)).select(pos, neg).sum();
  return -total / static_cast<Scalar>(detail::normalizer(n_objects));
}

/// d focal_loss / d pred. Cells whose prediction lies outside the clamp
/// interval report 0.
template <typename Derived1, typename Derived2>
Grid<typename Derived1::Scalar> focal_loss_grad(const Eigen::ArrayBase<Derived1>& pred,
                                                const Eigen::ArrayBase<Derived2>& target, int n_objects,
                                                const FocalParams& p = {}) {
  using Scalar = typename Derived1::Scalar;
  p.validate();
  detail::require_same_shape(pred, target, "focal_loss_grad");
  const Scalar eps = static_cast<Scalar>(p.clamp_eps);
  const Scalar alpha = static_cast<Scalar>(p.alpha);
  const Scalar beta = static_cast<Scalar>(p.beta);
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(detail::normalizer(n_objects));

  const auto& y = pred.derived();
  const auto& t = target.derived();
  const auto one_minus = Scalar(1) - y;
  // d/dy [(1-y)^a log y] = -a (1-y)^(a-1) log y + (1-y)^a / y
  const auto dpos = -alpha * one_minus.pow(alpha - 1) * y.log() + one_minus.pow(alpha) / y;
  // d/dy [(1-t)^b y^a log(1-y)] = (1-t)^b [a y^(a-1) log(1-y) - y^a / (1-y)]
  const auto dneg = (Scalar(1) - t).pow(beta) * (alpha * y.pow(alpha - 1) * one_minus.log() - y.pow(alpha) / one_minus);
  const auto interior = (y >= eps) && (y <= Scalar(1) - eps);

  Grid<Scalar> g = interior.select((t == Scalar(1)).select(dpos, dneg), Scalar(0));
  return -inv_n * g;
}

struct SmoothL1 {
  /// Quadratic below the breakpoint, linear above; C1 at the breakpoint.
  double breakpoint = 1.0;

  template <typename Scalar>
  Scalar operator()(Scalar x) const {
    const Scalar ax = std::abs(x);
    const Scalar b = static_cast<Scalar>(breakpoint);
    return ax < b ? Scalar(0.5) * x * x / b : ax - Scalar(0.5) * b;
  }

  template <typename Scalar>
  Scalar derivative(Scalar x) const {
    const Scalar b = static_cast<Scalar>(breakpoint);
    if (std::abs(x) < b) return x / b;
    return x > 0 ? Scalar(1) : Scalar(-1);
  }
};

template <typename Scalar>
Scalar smooth_l1(Scalar x) {
  return SmoothL1{}(x);
}

/// Offset-regression loss, read only at ground-truth extreme-point cells and
/// normalized by the annotation count. The center role carries no offset.
template <typename Scalar>
Scalar offset_loss(const std::array<Grid<Scalar>, kNumOffsetPlanes>& pred, const TargetBundle<Scalar>& targets,
                   const SmoothL1& sl1 = {}) {
  for (const auto& g : pred) detail::require_same_shape(g, targets.bundle.offsets[0], "offset_loss");
  if (targets.n_objects == 0) return Scalar(0);
  Scalar total(0);
  for (int k = 0; k < kNumExtremes; ++k) {
    for (const auto& gt : targets.gt_cells[k]) {
      for (int c = 0; c < 2; ++c) {
        const Scalar diff = pred[2 * k + c](gt.cell.row, gt.cell.col) - gt.offset[c];
        total += sl1(diff);
      }
    }
  }
  return total / static_cast<Scalar>(targets.n_objects);
}

template <typename Scalar>
std::array<Grid<Scalar>, kNumOffsetPlanes> offset_loss_grad(const std::array<Grid<Scalar>, kNumOffsetPlanes>& pred,
                                                            const TargetBundle<Scalar>& targets,
                                                            const SmoothL1& sl1 = {}) {
  std::array<Grid<Scalar>, kNumOffsetPlanes> g;
  for (int i = 0; i < kNumOffsetPlanes; ++i) {
    detail::require_same_shape(pred[i], targets.bundle.offsets[0], "offset_loss_grad");
    g[i] = Grid<Scalar>::Zero(pred[i].rows(), pred[i].cols());
  }
  if (targets.n_objects == 0) return g;
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(targets.n_objects);
  for (int k = 0; k < kNumExtremes; ++k) {
    for (const auto& gt : targets.gt_cells[k]) {
      for (int c = 0; c < 2; ++c) {
        const Scalar diff = pred[2 * k + c](gt.cell.row, gt.cell.col) - gt.offset[c];
        g[2 * k + c](gt.cell.row, gt.cell.col) += inv_n * sl1.derivative(diff);
      }
    }
  }
  return g;
}

struct GradientReport {
  double max_rel_err = 0;
  Eigen::Index worst_index = -1;
  /// Per-coordinate relative error, same layout as the checked input.
  Eigen::VectorXd rel_err;
  Eigen::VectorXd numeric;
  bool passed = true;
};

/// Compares an analytic gradient against central differences of `loss` at
/// `x`. `loss` may return a wider type than Scalar (e.g. long double) to keep
/// rounding in the reference below the tolerance. Relative error is |a - n| / max(|a|, |n|, denom_floor); the floor
/// keeps cells whose true gradient is ~0 from dividing rounding noise by
/// nothing. Coordinates with mask = false are skipped.
template <typename Scalar, typename LossFn>
GradientReport finite_diff_check(LossFn&& loss, const VectorX<Scalar>& x, const VectorX<Scalar>& analytic, Scalar h,
                                 double tol, double denom_floor = 1e-6,
                                 const Eigen::Array<bool, Eigen::Dynamic, 1>* mask = nullptr) {
  if (!(h > 0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  if (analytic.size() != x.size()) throw std::invalid_argument("finite_diff_check: gradient size mismatch");
  GradientReport rep;
  rep.rel_err = Eigen::VectorXd::Zero(x.size());
  rep.numeric = Eigen::VectorXd::Zero(x.size());
  VectorX<Scalar> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (mask && !(*mask)(i)) continue;
    // The difference is taken in the loss's own return type, so a loss
    // evaluated in extended precision keeps its extra digits; the step is
    // the one actually representable around x(i).
    const Scalar hi = x(i) + h, lo = x(i) - h;
    probe(i) = hi;
    const auto up = loss(probe);
    probe(i) = lo;
    const auto down = loss(probe);
    probe(i) = x(i);
    using R = std::common_type_t<decltype(up), double>;
    const double n = static_cast<double>((R(up) - R(down)) / (R(hi) - R(lo)));
    const double a = static_cast<double>(analytic(i));
    const double denom = std::max({std::abs(a), std::abs(n), denom_floor});
    rep.numeric(i) = n;
    rep.rel_err(i) = std::abs(a - n) / denom;
    if (rep.rel_err(i) > rep.max_rel_err || rep.worst_index < 0) {
      rep.max_rel_err = rep.rel_err(i);
      rep.worst_index = i;
    }
  }
  rep.passed = rep.max_rel_err < tol;
  return rep;
}

}  // namespace recist
