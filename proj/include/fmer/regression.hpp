#pragma once

#include <cstdint>
#include <vector>

#include "fmer/operator.hpp"

namespace fmer {

/// Scalar-response slope: a grid function plus intercept.
struct SlopeFunction {
  Vector beta;
  double intercept = 0.0;
  Grid grid;
};

/// Function-on-function slope: kernel b(t, s) over (response grid) x
/// (covariate grid), applied by quadrature, plus a pointwise intercept curve.
struct SlopeOperator {
  Matrix kernel;      // L_out x L_in
  Vector intercept;   // length L_out; empty means zero
  Grid grid_out;
  Grid grid_in;

  Vector apply(const Vector& f) const;
};

/// Quadratic-model fit: linear grid function plus symmetric quadratic kernel
/// over the covariate product grid. The shared intercept lives in `linear`.
struct QuadraticFit {
  SlopeFunction linear;
  Matrix quadratic;  // L x L, symmetric
};

/// C_hat_{y,W} = n^{-1} sum y_i W_i - ybar Wbar, as a grid function.
Vector cross_cov_scalar(const Vector& y, const CurveSet& w);

/// Regression calibration estimator for scalar response:
/// beta = sum_j lambda_j^{-1} <C, eta_j> eta_j, intercept = ybar - <Wbar, beta>.
SlopeFunction rc_scalar(const EigenSystem& es, const Vector& cyw, double y_bar,
                        const Vector& w_bar);

/// Function-on-function regression calibration: kernel of the empirical
/// cross-covariance operator composed with the Moore-Penrose inverse.
SlopeOperator rc_functional(const EigenSystem& es, const CurveSet& y,
                            const CurveSet& w);

/// (1/n) sum y_i W_i W_i' - ybar (1/n) sum W_i W_i'; symmetric.
Matrix cross_cov_quadratic(const Vector& y, const CurveSet& w);

/// Regression calibration for the quadratic model. The quadratic kernel uses
/// Moore-Penrose coefficients; the paper_coefficients flag multiplies the
/// kernel by 4 to match the displayed inverse. The intercept absorbs the
/// mean of the quadratic term: ybar - <Wbar, beta> - <mean W (x) W, B>.
QuadraticFit rc_quadratic(const EigenSystem& es, const Vector& cyw,
                          const Matrix& cyww, bool paper_coefficients,
                          double y_bar, const Vector& w_bar,
                          const Matrix& ww_bar);

/// Principal-component regression on the raw covariate covariance, truncated
/// at k components; no measurement-error correction.
SlopeFunction spectral_truncation(const CurveSet& w, const Vector& y, Index k);

/// Two-fold cross-validated component count for spectral truncation: mean
/// held-out squared prediction error over `reps` random partitions, minimized
/// over k in [1, k_max] with ties to the smaller k.
Index cv_select_components(const CurveSet& w, const Vector& y, Index k_max,
                           Index reps, std::uint64_t seed);

/// Functional-response variant; held-out error is the squared L2 norm of the
/// residual curves.
Index cv_select_components(const CurveSet& w, const CurveSet& y, Index k_max,
                           Index reps, std::uint64_t seed);

Vector predict(const SlopeFunction& fit, const CurveSet& w);
Matrix predict(const SlopeOperator& fit, const CurveSet& w);
Vector predict(const QuadraticFit& fit, const CurveSet& w);

/// 1 - SS_res / SS_tot for scalar predictions.
double r_squared(const Vector& actual, const Vector& predicted);

/// Functional version: ratio of summed squared L2 residual norms to summed
/// squared deviations from the mean curve.
double r_squared(const CurveSet& actual, const Matrix& predicted);

}  // namespace fmer
