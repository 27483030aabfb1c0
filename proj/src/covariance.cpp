#include "fmer/covariance.hpp"

#include <random>

#include "fmer/lbfgs.hpp"

namespace fmer {

BandMask::BandMask(Index size, double delta_star)
    : size_(size), delta_star_(delta_star) {
  if (size < 1) throw std::invalid_argument("BandMask: size must be positive");
  if (!(delta_star >= 0.0) || delta_star > 0.25) {
    throw std::invalid_argument("BandMask: deltaStar must lie in [0, 1/4]");
  }
  half_width_ = static_cast<Index>(
      std::ceil(static_cast<double>(size) * delta_star - 1e-12));
}

Matrix empirical_covariance(const Matrix& rows) {
  const Index n = rows.rows();
  if (n < 2) {
    throw insufficient_data_error(
        "empirical_covariance: need at least two curves");
  }
  const Vector mean = rows.colwise().mean();
  Matrix centered = rows.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

Matrix empirical_covariance(const CurveSet& curves) {
  return empirical_covariance(curves.data);
}

namespace {

// Best rank-j PSD approximation factor of a symmetric matrix.
Matrix spectral_init(const Matrix& khat, Index rank) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(khat);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("minimize_rank_j: eigendecomposition failed");
  }
  const Index size = khat.rows();
  Matrix theta = Matrix::Zero(size, rank);
  // Eigenvalues come back ascending; take the top `rank`.
  for (Index k = 0; k < rank; ++k) {
    const Index src = size - 1 - k;
    const double lambda = std::max(eig.eigenvalues()[src], 0.0);
    theta.col(k) = std::sqrt(lambda) * eig.eigenvectors().col(src);
  }
  return theta;
}

CompletionFit run_from(const Matrix& init, const Matrix& khat,
                       const BandMask& mask, const CompletionOptions& opts) {
  const Index size = khat.rows();
  const Index rank = init.cols();
  auto objective = [&](const Vector& x, Vector& grad) {
    const Eigen::Map<const Matrix> theta(x.data(), size, rank);
    Matrix residual = khat - theta * theta.transpose();
    mask.project(residual);
    const double value = residual.squaredNorm();
    Eigen::Map<Matrix>(grad.data(), size, rank) = -4.0 * residual * theta;
    return value;
  };
  LbfgsOptions lopts;
  lopts.grad_tol = opts.grad_tol;
  lopts.max_iterations = opts.max_iterations;
  Vector x0 = Eigen::Map<const Vector>(init.data(), size * rank);
  LbfgsResult res = lbfgs_minimize(objective, std::move(x0), lopts);
  CompletionFit fit;
  fit.theta = Eigen::Map<const Matrix>(res.x.data(), size, rank);
  fit.objective = res.value;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  return fit;
}

}  // namespace

CompletionFit minimize_rank_j(const Matrix& khat, const BandMask& mask,
                              Index rank, const CompletionOptions& opts) {
  const Index size = khat.rows();
  if (khat.cols() != size || mask.size() != size) {
    throw std::invalid_argument("minimize_rank_j: dimension mismatch");
  }
  if (rank < 1 || rank > size) {
    throw std::invalid_argument("minimize_rank_j: rank must be in [1, L]");
  }

  const Matrix base = spectral_init(khat, rank);
  CompletionFit best = run_from(base, khat, mask, opts);

  // The objective is bounded below by zero; restarts cannot improve on an
  // (essentially) exact fit.
  const double floor = 1e-12 * std::max(1.0, khat.squaredNorm());
  if (best.objective <= floor) return best;

  const double scale =
      base.norm() / std::sqrt(static_cast<double>(size * rank)) + 1e-3;
  std::mt19937_64 rng(0x5eedu + static_cast<std::uint64_t>(rank));
  std::normal_distribution<double> gauss(0.0, 0.1 * scale);
  for (int r = 1; r < opts.restarts; ++r) {
    Matrix init = base;
    for (Index c = 0; c < rank; ++c) {
      for (Index i = 0; i < size; ++i) init(i, c) += gauss(rng);
    }
    CompletionFit fit = run_from(init, khat, mask, opts);
    if (fit.objective < best.objective) best = std::move(fit);
    if (best.objective <= floor) return best;
  }
  for (const Matrix& init : opts.extra_inits) {
    if (init.rows() != size || init.cols() != rank) continue;
    CompletionFit fit = run_from(init, khat, mask, opts);
    if (fit.objective < best.objective) best = std::move(fit);
  }
  return best;
}

CompletionOptions completion_budget() {
  CompletionOptions opts;
  opts.max_iterations = 50;
  opts.restarts = 1;
  return opts;
}

std::optional<Index> scree_select(const std::vector<double>& scree,
                                  double c1) {
  if (scree.empty()) {
    throw std::invalid_argument("scree_select: empty scree");
  }
  for (std::size_t j = 0; j < scree.size(); ++j) {
    if (scree[j] <= c1) return static_cast<Index>(j + 1);
  }
  return std::nullopt;
}

}  // namespace fmer
