#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "fmer/errors.hpp"
#include "fmer/grid.hpp"
#include "fmer/types.hpp"

namespace fmer {

/// Symmetric 0/1 selector keeping entries with |i-j| > ceil(L * deltaStar).
/// deltaStar = 1/4 reproduces the theoretical mask 1(|i-j| > ceil(L/4)).
class BandMask {
 public:
  BandMask(Index size, double delta_star);

  Index size() const { return size_; }
  double delta_star() const { return delta_star_; }
  Index half_width() const { return half_width_; }
  bool keeps(Index i, Index j) const { return std::abs(i - j) > half_width_; }

  /// Zeroes the banded part of m in place, leaving the off-band entries.
  template <typename Derived>
  void project(Eigen::MatrixBase<Derived>& m) const {
    const Index hw = std::min(half_width_, size_ - 1);
    for (Index j = 0; j < size_; ++j) {
      const Index lo = std::max<Index>(0, j - hw);
      const Index hi = std::min(size_ - 1, j + hw);
      m.col(j).segment(lo, hi - lo + 1).setZero();
    }
  }

 private:
  Index size_;
  double delta_star_;
  Index half_width_;
};

inline BandMask band_mask(Index size, double delta_star) {
  return BandMask(size, delta_star);
}

/// (1/n) sum_i (W_i - Wbar)(W_i - Wbar)'. Divisor n, matching the estimator
/// the rates are stated for.
Matrix empirical_covariance(const CurveSet& curves);
Matrix empirical_covariance(const Matrix& rows);

/// || P o (Khat - theta theta') ||_F^2 in the unnormalized Frobenius form.
template <typename DerivedT, typename DerivedK>
double masked_objective(const Eigen::MatrixBase<DerivedT>& theta,
                        const Eigen::MatrixBase<DerivedK>& khat,
                        const BandMask& mask) {
  if (khat.rows() != khat.cols() || theta.rows() != khat.rows() ||
      mask.size() != khat.rows()) {
    throw std::invalid_argument("masked_objective: dimension mismatch");
  }
  Matrix residual = khat - theta * theta.transpose();
  mask.project(residual);
  return residual.squaredNorm();
}

/// Gradient of the factorized objective: -4 (P o (Khat - theta theta')) theta.
template <typename DerivedT, typename DerivedK>
Matrix masked_objective_gradient(const Eigen::MatrixBase<DerivedT>& theta,
                                 const Eigen::MatrixBase<DerivedK>& khat,
                                 const BandMask& mask) {
  Matrix residual = khat - theta * theta.transpose();
  mask.project(residual);
  return -4.0 * residual * theta;
}

struct CompletionOptions {
  double grad_tol = 1e-8;
  int max_iterations = 2000;
  int restarts = 3;  // spectral init plus restarts-1 perturbed inits
  std::vector<Matrix> extra_inits;  // tried in addition, e.g. warm starts
};

struct CompletionFit {
  Matrix theta;      // L x j factor; the estimate itself is theta theta'
  double objective;  // f(j) at the returned factor
  bool converged;
  int iterations;

  Matrix completed() const { return theta * theta.transpose(); }
};

/// Minimizes the masked objective over rank-j factors theta (L x j), starting
/// from the best rank-j spectral approximation of Khat. Keeps the best of the
/// restart runs. Non-convergence is reported through the flag, not an error.
CompletionFit minimize_rank_j(const Matrix& khat, const BandMask& mask,
                              Index rank, const CompletionOptions& opts = {});

/// Budget for the covariance-estimator fits in the regression pipeline:
/// a single bounded quasi-Newton descent from the spectral projection.
/// Fully minimized completions chase off-band sampling noise into the
/// unconstrained band region and degrade the downstream slope estimates;
/// the bounded descent acts as iterative regularization.
CompletionOptions completion_budget();

/// First rank whose scree value f(j) falls at or below the cutoff c1.
std::optional<Index> scree_select(const std::vector<double>& scree, double c1);

}  // namespace fmer
