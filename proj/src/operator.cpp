#include "fmer/operator.hpp"

namespace fmer {

namespace {

void fix_sign(Eigen::Ref<Vector> v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12 * scale) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

namespace {

EigenSystem kernel_eigen_impl(const Matrix& kx, const Grid& grid, Index rank,
                              bool truncate) {
  const Index size = grid.size();
  if (kx.rows() != size || kx.cols() != size) {
    throw std::invalid_argument("kernel_eigen: matrix does not match grid");
  }
  if (rank < 1 || rank > size) {
    throw std::invalid_argument("kernel_eigen: rank must be in [1, L]");
  }
  Matrix sym = 0.5 * (kx + kx.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("kernel_eigen: eigendecomposition failed");
  }
  const double scale = static_cast<double>(size);
  const double lead = eig.eigenvalues()[size - 1] / scale;
  const double cutoff = 1e-12 * std::max(lead, 0.0);

  EigenSystem out{Vector(rank), Matrix(size, rank), grid};
  for (Index k = 0; k < rank; ++k) {
    const Index src = size - 1 - k;  // ascending order from Eigen
    const double lambda = eig.eigenvalues()[src] / scale;
    if (!(lambda > cutoff) || lambda <= 0.0) {
      if (truncate) {
        out.eigenvalues.conservativeResize(k);
        out.eigenfunctions.conservativeResize(size, k);
        return out;
      }
      throw rank_deficient_error(
          "kernel_eigen: fewer than " + std::to_string(rank) +
          " positive eigenvalues");
    }
    out.eigenvalues[k] = lambda;
    out.eigenfunctions.col(k) = std::sqrt(scale) * eig.eigenvectors().col(src);
    fix_sign(out.eigenfunctions.col(k));
  }
  return out;
}

}  // namespace

EigenSystem kernel_eigen(const Matrix& kx, const Grid& grid, Index rank) {
  return kernel_eigen_impl(kx, grid, rank, false);
}

EigenSystem kernel_eigen_up_to(const Matrix& kx, const Grid& grid,
                               Index max_rank) {
  return kernel_eigen_impl(kx, grid, max_rank, true);
}

RankedOperator covariance_operator(EigenSystem system) {
  return RankedOperator{std::move(system), OperatorMode::covariance};
}

RankedOperator pseudo_inverse(EigenSystem system) {
  if ((system.eigenvalues.array() <= 0.0).any()) {
    throw std::invalid_argument("pseudo_inverse: eigenvalues must be positive");
  }
  return RankedOperator{std::move(system), OperatorMode::pseudo_inverse};
}

Vector apply_operator(const RankedOperator& op, const Vector& f) {
  const EigenSystem& es = op.system;
  if (f.size() != es.grid.size()) {
    throw std::invalid_argument("apply_operator: grid mismatch");
  }
  Vector coeffs = es.eigenfunctions.transpose() * f * es.grid.weight();
  if (op.mode == OperatorMode::pseudo_inverse) {
    coeffs.array() /= es.eigenvalues.array();
  } else {
    coeffs.array() *= es.eigenvalues.array();
  }
  return es.eigenfunctions * coeffs;
}

FourthMomentOperator::FourthMomentOperator(EigenSystem system,
                                           FourthMomentMode mode)
    : system_(std::move(system)), mode_(mode) {
  if (mode_ != FourthMomentMode::forward &&
      (system_.eigenvalues.array() <= 0.0).any()) {
    throw std::invalid_argument(
        "var_xx_pinv: eigenvalues must be positive for inversion");
  }
}

Matrix FourthMomentOperator::apply(const Matrix& kernel) const {
  const Index size = system_.grid.size();
  if (kernel.rows() != size || kernel.cols() != size) {
    throw std::invalid_argument("FourthMomentOperator: kernel size mismatch");
  }
  const Matrix& funcs = system_.eigenfunctions;
  const Vector& lambda = system_.eigenvalues;
  const Index r = lambda.size();
  const double w2 = system_.grid.weight() * system_.grid.weight();

  // Coefficients c(j,j') = <zeta_jj', kernel>_HS under quadrature.
  Matrix coeff = w2 * funcs.transpose() * kernel * funcs;
  Matrix mapped(r, r);
  for (Index j = 0; j < r; ++j) {
    for (Index jp = 0; jp < r; ++jp) {
      if (j == jp) {
        const double eigval = 2.0 * lambda[j] * lambda[j];
        mapped(j, j) = (mode_ == FourthMomentMode::forward)
                           ? eigval * coeff(j, j)
                           : coeff(j, j) / eigval;
      } else {
        // Symmetric part carries eigenvalue 2 lambda_j lambda_j'; the
        // antisymmetric part is annihilated in every mode.
        const double sym = 0.5 * (coeff(j, jp) + coeff(jp, j));
        const double eigval = 2.0 * lambda[j] * lambda[jp];
        mapped(j, jp) = (mode_ == FourthMomentMode::forward) ? eigval * sym
                                                             : sym / eigval;
      }
    }
  }
  if (mode_ == FourthMomentMode::paper_inverse) mapped *= 4.0;
  return funcs * mapped * funcs.transpose();
}

Matrix rank_one_kernel(const EigenSystem& system, Index j, Index jp) {
  if (j < 0 || jp < 0 || j >= system.rank() || jp >= system.rank()) {
    throw std::invalid_argument("rank_one_kernel: index out of range");
  }
  return system.eigenfunctions.col(j) * system.eigenfunctions.col(jp).transpose();
}

double hs_inner(const Matrix& a, const Matrix& b, const Grid& grid) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("hs_inner: dimension mismatch");
  }
  const double w = grid.weight();
  return a.cwiseProduct(b).sum() * w * w;
}

}  // namespace fmer
