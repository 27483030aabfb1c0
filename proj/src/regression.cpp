#include "fmer/regression.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "fmer/covariance.hpp"

namespace fmer {

Vector SlopeOperator::apply(const Vector& f) const {
  if (f.size() != grid_in.size()) {
    throw std::invalid_argument("SlopeOperator::apply: grid mismatch");
  }
  return kernel * f * grid_in.weight();
}

Vector cross_cov_scalar(const Vector& y, const CurveSet& w) {
  const Index n = w.n();
  if (y.size() != n) {
    throw std::invalid_argument("cross_cov_scalar: length mismatch");
  }
  if (n < 2) {
    throw insufficient_data_error("cross_cov_scalar: need n >= 2");
  }
  const double y_bar = y.mean();
  const Vector w_bar = w.data.colwise().mean();
  return w.data.transpose() * y / static_cast<double>(n) - y_bar * w_bar;
}

SlopeFunction rc_scalar(const EigenSystem& es, const Vector& cyw, double y_bar,
                        const Vector& w_bar) {
  if (es.rank() < 1) {
    throw std::invalid_argument("rc_scalar: empty eigensystem");
  }
  if (cyw.size() != es.grid.size() || w_bar.size() != es.grid.size()) {
    throw std::invalid_argument("rc_scalar: grid mismatch");
  }
  const Vector scores =
      es.eigenfunctions.transpose() * cyw * es.grid.weight();
  const Vector beta =
      es.eigenfunctions * (scores.array() / es.eigenvalues.array()).matrix();
  SlopeFunction fit{beta, 0.0, es.grid};
  fit.intercept = y_bar - inner_product(w_bar, beta, es.grid);
  return fit;
}

SlopeOperator rc_functional(const EigenSystem& es, const CurveSet& y,
                            const CurveSet& w) {
  const Index n = w.n();
  if (y.n() != n) {
    throw std::invalid_argument("rc_functional: sample sizes differ");
  }
  if (n < 2) throw insufficient_data_error("rc_functional: need n >= 2");
  if (w.length() != es.grid.size()) {
    throw std::invalid_argument("rc_functional: eigensystem grid mismatch");
  }
  const Vector y_bar = y.data.colwise().mean();
  const Vector w_bar = w.data.colwise().mean();
  // Kernel of the empirical cross-covariance operator C_{y,W}.
  Matrix cross = y.data.transpose() * w.data / static_cast<double>(n) -
                 y_bar * w_bar.transpose();

  // Compose with the pseudo-inverse in spectral form:
  // b(t, s) = sum_j lambda_j^{-1} (C eta_j)(t) eta_j(s).
  const double w_in = es.grid.weight();
  Matrix projected = cross * es.eigenfunctions * w_in;  // (C eta_j)(t)
  for (Index j = 0; j < es.rank(); ++j) projected.col(j) /= es.eigenvalues[j];
  SlopeOperator fit{projected * es.eigenfunctions.transpose(), Vector(),
                    y.grid, w.grid};
  fit.intercept = y_bar - fit.apply(w_bar);
  return fit;
}

Matrix cross_cov_quadratic(const Vector& y, const CurveSet& w) {
  const Index n = w.n();
  if (y.size() != n) {
    throw std::invalid_argument("cross_cov_quadratic: length mismatch");
  }
  if (n < 2) {
    throw insufficient_data_error("cross_cov_quadratic: need n >= 2");
  }
  const double y_bar = y.mean();
  const Matrix& rows = w.data;
  Matrix weighted = rows.transpose() * y.asDiagonal() * rows;
  Matrix raw = rows.transpose() * rows;
  Matrix out = (weighted - y_bar * raw) / static_cast<double>(n);
  out = 0.5 * (out + out.transpose()).eval();
  return out;
}

QuadraticFit rc_quadratic(const EigenSystem& es, const Vector& cyw,
                          const Matrix& cyww, bool paper_coefficients,
                          double y_bar, const Vector& w_bar,
                          const Matrix& ww_bar) {
  QuadraticFit fit{rc_scalar(es, cyw, y_bar, w_bar), Matrix()};
  fit.quadratic = var_xx_pinv(es, paper_coefficients).apply(cyww);
  fit.linear.intercept = y_bar - inner_product(w_bar, fit.linear.beta, es.grid) -
                         hs_inner(ww_bar, fit.quadratic, es.grid);
  return fit;
}

SlopeFunction spectral_truncation(const CurveSet& w, const Vector& y,
                                  Index k) {
  if (k < 1) {
    throw std::invalid_argument("spectral_truncation: k must be positive");
  }
  const Matrix khat_w = empirical_covariance(w);
  const EigenSystem es = kernel_eigen(khat_w, w.grid, k);  // rank_deficient if short
  const Vector cyw = cross_cov_scalar(y, w);
  const Vector w_bar = w.data.colwise().mean();
  return rc_scalar(es, cyw, y.mean(), w_bar);
}

namespace {

// Held-out squared prediction errors for every k in one partition half.
void accumulate_fold_errors(const Matrix& train_w, const Vector& train_y,
                            const Matrix& test_w, const Vector& test_y,
                            const Grid& grid, Index k_max,
                            std::vector<double>& error_by_k) {
  const Index n_train = train_w.rows();
  const Vector w_bar = train_w.colwise().mean();
  const double y_bar = train_y.mean();
  const Matrix khat = empirical_covariance(train_w);
  // Folds of low-rank data may not support every requested k; infeasible
  // component counts score as infinitely bad instead of aborting the CV.
  const EigenSystem es = kernel_eigen_up_to(khat, grid, k_max);
  const Vector cyw = train_w.transpose() * train_y / static_cast<double>(n_train) -
                     y_bar * w_bar;

  const double weight = grid.weight();
  const Vector proj = es.eigenfunctions.transpose() * cyw * weight;
  // Predictions accumulate component by component as k grows.
  Vector beta = Vector::Zero(grid.size());
  for (Index k = 1; k <= k_max; ++k) {
    if (k > es.rank()) {
      error_by_k[static_cast<std::size_t>(k - 1)] =
          std::numeric_limits<double>::infinity();
      continue;
    }
    beta += (proj[k - 1] / es.eigenvalues[k - 1]) * es.eigenfunctions.col(k - 1);
    const double intercept = y_bar - w_bar.dot(beta) * weight;
    const Vector pred =
        (test_w * beta * weight).array() + intercept;
    error_by_k[static_cast<std::size_t>(k - 1)] +=
        (test_y - pred).squaredNorm();
  }
}

// Functional-response fold: residual curves scored by squared L2 norm.
void accumulate_fold_errors_functional(const Matrix& train_w,
                                       const Matrix& train_y,
                                       const Matrix& test_w,
                                       const Matrix& test_y, const Grid& grid,
                                       Index k_max,
                                       std::vector<double>& error_by_k) {
  const Index n_train = train_w.rows();
  const Vector w_bar = train_w.colwise().mean();
  const Vector y_bar = train_y.colwise().mean();
  const Matrix khat = empirical_covariance(train_w);
  const EigenSystem es = kernel_eigen_up_to(khat, grid, k_max);
  const Matrix cross = train_y.transpose() * train_w / static_cast<double>(n_train) -
                       y_bar * w_bar.transpose();

  const double weight = grid.weight();
  const Matrix projected = cross * es.eigenfunctions * weight;  // (C eta_j)(t)
  Matrix kernel = Matrix::Zero(train_y.cols(), grid.size());
  for (Index k = 1; k <= k_max; ++k) {
    if (k > es.rank()) {
      error_by_k[static_cast<std::size_t>(k - 1)] =
          std::numeric_limits<double>::infinity();
      continue;
    }
    kernel += (projected.col(k - 1) / es.eigenvalues[k - 1]) *
              es.eigenfunctions.col(k - 1).transpose();
    const Vector intercept = y_bar - kernel * w_bar * weight;
    Matrix pred = test_w * kernel.transpose() * weight;
    pred.rowwise() += intercept.transpose();
    error_by_k[static_cast<std::size_t>(k - 1)] += (test_y - pred).squaredNorm();
  }
}

}  // namespace

namespace {

template <typename FoldFn>
Index cv_argmin(Index n, Index k_max, Index reps, std::uint64_t seed,
                const FoldFn& fold_fn) {
  std::vector<double> error_by_k(static_cast<std::size_t>(k_max), 0.0);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index rep = 0; rep < reps; ++rep) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(rep));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const Index half = n / 2;
    for (int fold = 0; fold < 2; ++fold) {
      const Index test_begin = (fold == 0) ? 0 : half;
      const Index test_end = (fold == 0) ? half : n;
      fold_fn(perm, test_begin, test_end, error_by_k);
    }
  }
  Index best = 1;
  for (Index k = 2; k <= k_max; ++k) {
    if (error_by_k[static_cast<std::size_t>(k - 1)] <
        error_by_k[static_cast<std::size_t>(best - 1)]) {
      best = k;
    }
  }
  return best;
}

}  // namespace

Index cv_select_components(const CurveSet& w, const Vector& y, Index k_max,
                           Index reps, std::uint64_t seed) {
  const Index n = w.n();
  if (y.size() != n) {
    throw std::invalid_argument("cv_select_components: length mismatch");
  }
  if (n < 4) {
    throw insufficient_data_error(
        "cv_select_components: need n >= 4 for two folds");
  }
  if (k_max < 1 || reps < 1) {
    throw std::invalid_argument("cv_select_components: bad k_max or reps");
  }

  auto fold_fn = [&](const std::vector<Index>& perm, Index test_begin,
                     Index test_end, std::vector<double>& error_by_k) {
    const Index n_test = test_end - test_begin;
    const Index n_train = n - n_test;
    Matrix train_w(n_train, w.length()), test_w(n_test, w.length());
    Vector train_y(n_train), test_y(n_test);
    Index it = 0, iv = 0;
    for (Index i = 0; i < n; ++i) {
      const Index row = perm[static_cast<std::size_t>(i)];
      if (i >= test_begin && i < test_end) {
        test_w.row(iv) = w.data.row(row);
        test_y[iv++] = y[row];
      } else {
        train_w.row(it) = w.data.row(row);
        train_y[it++] = y[row];
      }
    }
    accumulate_fold_errors(train_w, train_y, test_w, test_y, w.grid, k_max,
                           error_by_k);
  };
  return cv_argmin(n, k_max, reps, seed, fold_fn);
}

Index cv_select_components(const CurveSet& w, const CurveSet& y, Index k_max,
                           Index reps, std::uint64_t seed) {
  const Index n = w.n();
  if (y.n() != n) {
    throw std::invalid_argument("cv_select_components: sample sizes differ");
  }
  if (n < 4) {
    throw insufficient_data_error(
        "cv_select_components: need n >= 4 for two folds");
  }
  if (k_max < 1 || reps < 1) {
    throw std::invalid_argument("cv_select_components: bad k_max or reps");
  }
  auto fold_fn = [&](const std::vector<Index>& perm, Index test_begin,
                     Index test_end, std::vector<double>& error_by_k) {
    const Index n_test = test_end - test_begin;
    const Index n_train = n - n_test;
    Matrix train_w(n_train, w.length()), test_w(n_test, w.length());
    Matrix train_y(n_train, y.length()), test_y(n_test, y.length());
    Index it = 0, iv = 0;
    for (Index i = 0; i < n; ++i) {
      const Index row = perm[static_cast<std::size_t>(i)];
      if (i >= test_begin && i < test_end) {
        test_w.row(iv) = w.data.row(row);
        test_y.row(iv++) = y.data.row(row);
      } else {
        train_w.row(it) = w.data.row(row);
        train_y.row(it++) = y.data.row(row);
      }
    }
    accumulate_fold_errors_functional(train_w, train_y, test_w, test_y, w.grid,
                                      k_max, error_by_k);
  };
  return cv_argmin(n, k_max, reps, seed, fold_fn);
}

Vector predict(const SlopeFunction& fit, const CurveSet& w) {
  if (w.length() != fit.grid.size()) {
    throw std::invalid_argument("predict: grid mismatch");
  }
  return (w.data * fit.beta * fit.grid.weight()).array() + fit.intercept;
}

Matrix predict(const SlopeOperator& fit, const CurveSet& w) {
  if (w.length() != fit.grid_in.size()) {
    throw std::invalid_argument("predict: grid mismatch");
  }
  Matrix out = w.data * fit.kernel.transpose() * fit.grid_in.weight();
  if (fit.intercept.size() > 0) {
    out.rowwise() += fit.intercept.transpose();
  }
  return out;
}

Vector predict(const QuadraticFit& fit, const CurveSet& w) {
  Vector out = predict(fit.linear, w);
  const double weight = fit.linear.grid.weight();
  for (Index i = 0; i < w.n(); ++i) {
    const Vector wi = w.data.row(i);
    out[i] += weight * weight * wi.dot(fit.quadratic * wi);
  }
  return out;
}

double r_squared(const Vector& actual, const Vector& predicted) {
  if (actual.size() != predicted.size()) {
    throw std::invalid_argument("r_squared: length mismatch");
  }
  const double total =
      (actual.array() - actual.mean()).matrix().squaredNorm();
  if (total <= 0.0) {
    throw undefined_metric_error("r_squared: zero total variation");
  }
  return 1.0 - (actual - predicted).squaredNorm() / total;
}

double r_squared(const CurveSet& actual, const Matrix& predicted) {
  if (predicted.rows() != actual.n() || predicted.cols() != actual.length()) {
    throw std::invalid_argument("r_squared: shape mismatch");
  }
  const Vector mean_curve = actual.data.colwise().mean();
  const double total =
      (actual.data.rowwise() - mean_curve.transpose()).squaredNorm();
  if (total <= 0.0) {
    throw undefined_metric_error("r_squared: zero total variation");
  }
  return 1.0 - (actual.data - predicted).squaredNorm() / total;
}

}  // namespace fmer
