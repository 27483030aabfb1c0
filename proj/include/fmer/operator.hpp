#pragma once

#include "fmer/errors.hpp"
#include "fmer/grid.hpp"
#include "fmer/types.hpp"

namespace fmer {

/// Ordered positive eigenvalues and grid-sampled eigenfunctions of an
/// estimated covariance operator. Eigenfunctions are columns, orthonormal
/// under the grid quadrature; signs fixed so the first nonzero coordinate
/// is positive.
struct EigenSystem {
  Vector eigenvalues;      // descending, strictly positive
  Matrix eigenfunctions;   // L x r
  Grid grid;

  Index rank() const { return eigenvalues.size(); }
};

/// Eigensystem of the integral operator with the piecewise-constant kernel
/// built from Kx: operator eigenvalues are those of Kx / L, eigenfunctions
/// the matrix eigenvectors scaled by sqrt(L). Eigenvalues at or below
/// 1e-12 * lambda_1 count as zero; asking for more positive ones is an error.
EigenSystem kernel_eigen(const Matrix& kx, const Grid& grid, Index rank);

/// Like kernel_eigen but truncates at the positive spectrum instead of
/// throwing: returns min(max_rank, number of positive eigenvalues) components.
EigenSystem kernel_eigen_up_to(const Matrix& kx, const Grid& grid,
                               Index max_rank);

enum class OperatorMode { covariance, pseudo_inverse };

/// Finite-rank self-adjoint operator in spectral form: applies as
/// sum_j lambda_j^{+-1} <f, eta_j> eta_j.
struct RankedOperator {
  EigenSystem system;
  OperatorMode mode;
};

RankedOperator covariance_operator(EigenSystem system);

/// Moore-Penrose inverse over the retained (strictly positive) eigenvalues.
RankedOperator pseudo_inverse(EigenSystem system);

Vector apply_operator(const RankedOperator& op, const Vector& f);

enum class FourthMomentMode { forward, mp_inverse, paper_inverse };

/// Spectral form of var(X (x) X) for Gaussian X and of its inverse: acts with
/// 2 lambda_j^2 on zeta_jj and 2 lambda_j lambda_j' on the symmetric span of
/// (zeta_jj', zeta_j'j), and annihilates the antisymmetric span. The
/// paper_inverse mode applies exactly 4x the Moore-Penrose action.
class FourthMomentOperator {
 public:
  FourthMomentOperator(EigenSystem system, FourthMomentMode mode);

  /// Applies the operator to a Hilbert-Schmidt kernel given as an L x L
  /// matrix of values over the product grid.
  Matrix apply(const Matrix& kernel) const;

  const EigenSystem& system() const { return system_; }
  FourthMomentMode mode() const { return mode_; }

 private:
  EigenSystem system_;
  FourthMomentMode mode_;
};

inline FourthMomentOperator var_xx_forward(EigenSystem system) {
  return FourthMomentOperator(std::move(system), FourthMomentMode::forward);
}

inline FourthMomentOperator var_xx_pinv(EigenSystem system,
                                        bool paper_coefficients = false) {
  return FourthMomentOperator(std::move(system),
                              paper_coefficients
                                  ? FourthMomentMode::paper_inverse
                                  : FourthMomentMode::mp_inverse);
}

/// Kernel matrix of the rank-one operator eta_j (x) eta_j' over the grid.
Matrix rank_one_kernel(const EigenSystem& system, Index j, Index jp);

/// Quadrature Hilbert-Schmidt inner product of two kernels: (1/L^2) sum a*b.
double hs_inner(const Matrix& a, const Matrix& b, const Grid& grid);

inline double hs_norm(const Matrix& a, const Grid& grid) {
  return std::sqrt(hs_inner(a, a, grid));
}

}  // namespace fmer
