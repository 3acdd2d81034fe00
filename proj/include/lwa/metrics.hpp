/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "lwa/error.hpp"
#include "lwa/lwa.hpp"
#include "lwa/raster.hpp"

namespace lwa {

// ---------------------------------------------------------------------------
// Depth

/// Scale-invariant RMSE: the standard deviation of ln(pred) - ln(gt) over
/// pixels inside `region` (all pixels when null) where both maps are valid
/// and positive. Throws kEmptyRegion when no pixel qualifies.
double si_rmse(const ConditionMap& pred, const ConditionMap& gt,
               const VisibilityMask* region = nullptr);

// ---------------------------------------------------------------------------
// Segmentation

/// Counts over an active class list. Row = ground truth, column =
/// prediction; the extra last column collects predictions outside the list.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::uint32_t> classes);

  /// Pixels whose ground truth is not an active class are ignored.
  void add(std::uint32_t gt, std::uint32_t pred);

  const std::vector<std::uint32_t>& classes() const { return classes_; }
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& counts() const {
    return counts_;
  }
  std::int64_t total() const { return counts_.sum(); }
  std::int64_t true_positives(std::size_t k) const;
  std::int64_t false_positives(std::size_t k) const;
  std::int64_t false_negatives(std::size_t k) const;

 private:
  std::vector<std::uint32_t> classes_;
  std::map<std::uint32_t, std::size_t> slot_;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts_;
};

struct MiouResult {
  double miou = 0.0;
  /// IoU of every class with TP + FP + FN > 0; the others are left out of
  /// the mean.
  std::map<std::uint32_t, double> per_class;
  std::int64_t evaluated_pixels = 0;
};

MiouResult miou(const ConditionMap& pred, const ConditionMap& gt,
                std::span<const std::uint32_t> classes,
                const VisibilityMask* region = nullptr);

// ---------------------------------------------------------------------------
// Frechet distance

/// Square root of a symmetric PSD matrix: S with S * S = M + eps * I, via a
/// symmetric eigendecomposition with negative eigenvalues clamped to zero.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_sqrt_psd(
    const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar eps = 0) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix square root needs a square matrix");
  }
  const Scalar scale = std::max<Scalar>(Scalar(1), m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() >
      Scalar(1e3) * Eigen::NumTraits<Scalar>::epsilon() * scale * Scalar(m.rows())) {
    throw Error(ErrorCode::kInvalidArgument, "matrix is not symmetric");
  }
  Matrix sym = (m + m.transpose()) / Scalar(2);
  sym.diagonal().array() += eps;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumerical, "eigendecomposition did not converge");
  }
  const auto roots = solver.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

template <typename Scalar>
struct GaussianFit {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cov;
};

/// Sample mean and unbiased covariance of the rows of `features`.
template <typename Derived>
GaussianFit<typename Derived::Scalar> fit_gaussian(const Eigen::MatrixBase<Derived>& features) {
  using Scalar = typename Derived::Scalar;
  if (features.rows() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "covariance needs at least 2 feature rows");
  }
  if (!features.allFinite()) {
    throw Error(ErrorCode::kNumerical, "feature set has non-finite entries");
  }
  GaussianFit<Scalar> fit;
  fit.mean = features.colwise().mean().transpose();
  const auto centered = (features.rowwise() - fit.mean.transpose()).eval();
  fit.cov = (centered.transpose() * centered) / static_cast<Scalar>(features.rows() - 1);
  return fit;
}

/// Frechet distance between two Gaussians with `eps * I` added to both
/// covariances, using the trace of sqrt(A^1/2 B A^1/2). Tiny negative
/// results from rounding are clamped to zero.
template <typename Scalar>
Scalar frechet_distance(const GaussianFit<Scalar>& a, const GaussianFit<Scalar>& b,
                        Scalar eps) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.mean.size() != b.mean.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimensions differ");
  }
  const Matrix root_a = matrix_sqrt_psd(a.cov, eps);
  Matrix cov_b = b.cov;
  cov_b.diagonal().array() += eps;
  const Matrix inner = root_a * cov_b * root_a;
  const Matrix cross = matrix_sqrt_psd((inner + inner.transpose()) / Scalar(2));
  const Scalar d = static_cast<Scalar>(a.mean.size());
  const Scalar value = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() +
                       Scalar(2) * d * eps - Scalar(2) * cross.trace();
  return std::max(value, Scalar(0));
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar frechet_distance(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b,
                                           typename DerivedA::Scalar eps) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimensions differ");
  }
  return frechet_distance(fit_gaussian(a), fit_gaussian(b), eps);
}

// ---------------------------------------------------------------------------
// Controllability

enum class RegionRestriction { kFull, kPreserved };

std::string_view to_string(RegionRestriction r);
RegionRestriction region_restriction_from_string(std::string_view name);

struct ControllabilityReport {
  double si_rmse = 0.0;
  MiouResult miou;
  RegionRestriction region = RegionRestriction::kFull;
};

/// Compares annotator depth and semantics of a generated frame against the
/// composite of the simulator abstraction, optionally only inside the
/// traffic and layout masks.
ControllabilityReport controllability_report(const ConditionStack& predicted, const Lwa& sim,
                                             RegionRestriction restrict,
                                             std::span<const std::uint32_t> classes);

}  // namespace lwa
