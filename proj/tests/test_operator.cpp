#include <doctest.h>

#include <random>

#include "fmer/covariance.hpp"
#include "fmer/operator.hpp"

using namespace fmer;

namespace {

// Quadrature-orthonormal columns via QR against the 1/L weight.
Matrix orthonormal_columns(Index size, Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix m(size, count);
  for (Index i = 0; i < m.size(); ++i) m(i) = gauss(rng);
  const Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(size, count);
  return q * std::sqrt(static_cast<double>(size));
}

EigenSystem toy_system(const Grid& grid, Vector eigenvalues,
                       std::uint64_t seed) {
  const Index r = eigenvalues.size();
  return EigenSystem{std::move(eigenvalues),
                     orthonormal_columns(grid.size(), r, seed), grid};
}

}  // namespace

TEST_CASE("kernel_eigen divides matrix eigenvalues by L") {
  const Grid grid = sample_adequate_grid(4, 6);
  const Matrix kx = 4.0 * Matrix::Identity(4, 4);
  const EigenSystem es = kernel_eigen(kx, grid, 4);
  for (Index j = 0; j < 4; ++j) {
    CHECK(es.eigenvalues[j] == doctest::Approx(1.0));
  }
}

TEST_CASE("kernel_eigen on a hand-decomposed 2x2 matrix") {
  const Grid grid = sample_adequate_grid(2, 6);
  Matrix kx(2, 2);
  kx << 2.0, 1.0, 1.0, 2.0;
  const EigenSystem es = kernel_eigen(kx, grid, 2);
  CHECK(es.eigenvalues[0] == doctest::Approx(1.5));
  CHECK(es.eigenvalues[1] == doctest::Approx(0.5));
}

TEST_CASE("kernel_eigen round-trips a spectrally built matrix") {
  const Grid grid = sample_adequate_grid(30, 13);
  Vector lambda(3);
  lambda << 2.0, 1.0, 0.25;
  const Matrix funcs = orthonormal_columns(30, 3, 5);
  const Matrix kx = funcs * lambda.asDiagonal() * funcs.transpose();
  const EigenSystem es = kernel_eigen(kx, grid, 3);
  for (Index j = 0; j < 3; ++j) {
    CHECK(es.eigenvalues[j] == doctest::Approx(lambda[j]).epsilon(1e-8));
  }
  for (Index j = 0; j < 3; ++j) {
    // Sign-normalized comparison.
    Vector expected = funcs.col(j);
    if ((expected - es.eigenfunctions.col(j)).norm() >
        (expected + es.eigenfunctions.col(j)).norm()) {
      expected = -expected;
    }
    CHECK((expected - es.eigenfunctions.col(j)).lpNorm<Eigen::Infinity>() <
          1e-8);
  }
}

TEST_CASE("kernel_eigen eigenfunctions are quadrature orthonormal") {
  const Grid grid = sample_adequate_grid(25, 3);
  const Matrix kx = empirical_covariance(
      Matrix::Random(40, 25));
  const EigenSystem es = kernel_eigen(kx, grid, 5);
  for (Index a = 0; a < 5; ++a) {
    for (Index b = 0; b <= a; ++b) {
      const double ip =
          inner_product(es.eigenfunctions.col(a), es.eigenfunctions.col(b), grid);
      CHECK(ip == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("kernel_eigen trace consistency") {
  const Grid grid = sample_adequate_grid(12, 19);
  Matrix base = Matrix::Random(12, 12);
  const Matrix kx = base * base.transpose() + 12.0 * Matrix::Identity(12, 12);
  const EigenSystem es = kernel_eigen(kx, grid, 12);
  CHECK(es.eigenvalues.sum() ==
        doctest::Approx(kx.trace() / 12.0).epsilon(1e-10));
}

TEST_CASE("kernel_eigen reports rank deficiency") {
  const Grid grid = sample_adequate_grid(6, 2);
  Vector v = Vector::Ones(6);
  const Matrix kx = v * v.transpose();  // rank one
  CHECK_THROWS_AS(kernel_eigen(kx, grid, 2), rank_deficient_error);
}

TEST_CASE("pseudo-inverse halves a rank-one system with eigenvalue two") {
  const Grid grid = sample_adequate_grid(10, 4);
  EigenSystem es = toy_system(grid, Vector::Constant(1, 2.0), 8);
  const Vector eta = es.eigenfunctions.col(0);
  const Vector out = apply_operator(pseudo_inverse(es), eta);
  CHECK((out - 0.5 * eta).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("pseudo-inverse annihilates the orthogonal complement") {
  const Grid grid = sample_adequate_grid(10, 4);
  const Matrix funcs = orthonormal_columns(10, 3, 8);
  EigenSystem es{Vector::Constant(2, 1.0), funcs.leftCols(2), grid};
  const Vector f = funcs.col(2);  // orthogonal to the retained pair
  const Vector out = apply_operator(pseudo_inverse(es), f);
  CHECK(out.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("covariance and pseudo-inverse invert each other on the range") {
  const Grid grid = sample_adequate_grid(20, 14);
  Vector lambda(4);
  lambda << 3.0, 1.0, 0.5, 0.01;
  const EigenSystem es = toy_system(grid, lambda, 31);
  const RankedOperator cov = covariance_operator(es);
  const RankedOperator pinv = pseudo_inverse(es);

  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 5; ++trial) {
    Vector f(20);
    for (Index i = 0; i < 20; ++i) f[i] = gauss(rng);
    // A A- A = A and A- A A- = A- in action.
    const Vector a = apply_operator(cov, f);
    CHECK((apply_operator(cov, apply_operator(pinv, a)) - a)
              .lpNorm<Eigen::Infinity>() < 1e-8);
    const Vector b = apply_operator(pinv, f);
    CHECK((apply_operator(pinv, apply_operator(cov, b)) - b)
              .lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("zero eigenvalues are rejected for inversion") {
  const Grid grid = sample_adequate_grid(5, 5);
  EigenSystem es = toy_system(grid, Vector::Zero(1), 2);
  CHECK_THROWS_AS(pseudo_inverse(es), std::invalid_argument);
}

TEST_CASE("forward fourth-moment operator scales zeta_jj by 2 lambda_j^2") {
  const Grid grid = sample_adequate_grid(15, 9);
  Vector lambda(3);
  lambda << 1.5, 0.9, 0.3;
  const EigenSystem es = toy_system(grid, lambda, 12);
  const FourthMomentOperator forward = var_xx_forward(es);
  for (Index j = 0; j < 3; ++j) {
    const Matrix zeta = rank_one_kernel(es, j, j);
    const Matrix out = forward.apply(zeta);
    CHECK((out - 2.0 * lambda[j] * lambda[j] * zeta).lpNorm<Eigen::Infinity>() <
          1e-10);
  }
}

TEST_CASE("Moore-Penrose fourth-moment inverse is exact on the symmetric span") {
  const Grid grid = sample_adequate_grid(15, 9);
  Vector lambda(3);
  lambda << 1.5, 0.9, 0.3;
  const EigenSystem es = toy_system(grid, lambda, 12);
  const FourthMomentOperator forward = var_xx_forward(es);
  const FourthMomentOperator inverse = var_xx_pinv(es);

  const Matrix s = rank_one_kernel(es, 0, 1) + rank_one_kernel(es, 1, 0);
  CHECK((forward.apply(inverse.apply(s)) - s).lpNorm<Eigen::Infinity>() <
        1e-10);
  CHECK((inverse.apply(forward.apply(s)) - s).lpNorm<Eigen::Infinity>() <
        1e-10);

  SUBCASE("paper coefficients give exactly four times the composition") {
    const FourthMomentOperator paper = var_xx_pinv(es, true);
    CHECK((forward.apply(paper.apply(s)) - 4.0 * s).lpNorm<Eigen::Infinity>() <
          1e-10);
    CHECK((paper.apply(s) - 4.0 * inverse.apply(s)).lpNorm<Eigen::Infinity>() <
          1e-12);
  }
}

TEST_CASE("fourth-moment operator annihilates the antisymmetric span") {
  const Grid grid = sample_adequate_grid(12, 10);
  Vector lambda(2);
  lambda << 1.0, 0.4;
  const EigenSystem es = toy_system(grid, lambda, 3);
  const Matrix anti = rank_one_kernel(es, 0, 1) - rank_one_kernel(es, 1, 0);
  CHECK(var_xx_forward(es).apply(anti).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(var_xx_pinv(es).apply(anti).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("fourth-moment pseudo-inverse identities in operator action") {
  const Grid grid = sample_adequate_grid(12, 21);
  Vector lambda(3);
  lambda << 2.0, 0.7, 0.2;
  const EigenSystem es = toy_system(grid, lambda, 40);
  const FourthMomentOperator a = var_xx_forward(es);
  const FourthMomentOperator ainv = var_xx_pinv(es);
  std::mt19937_64 rng(50);
  std::normal_distribution<double> gauss;
  Matrix t(12, 12);
  for (Index i = 0; i < t.size(); ++i) t(i) = gauss(rng);
  const Matrix at = a.apply(t);
  CHECK((a.apply(ainv.apply(at)) - at).lpNorm<Eigen::Infinity>() < 1e-8);
  const Matrix it = ainv.apply(t);
  CHECK((ainv.apply(a.apply(it)) - it).lpNorm<Eigen::Infinity>() < 1e-8);
}
