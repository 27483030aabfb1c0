#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fmer/grid.hpp"

using namespace fmer;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("adequate grid nodes stay in their cells") {
  for (Index length : {1, 4, 25, 100}) {
    const Grid grid = sample_adequate_grid(length, 7);
    REQUIRE(grid.size() == length);
    for (Index j = 0; j < length; ++j) {
      const double lo = static_cast<double>(j) / static_cast<double>(length);
      const double hi = static_cast<double>(j + 1) / static_cast<double>(length);
      CHECK(grid.node(j) >= lo);
      CHECK(grid.node(j) < hi);
      if (j > 0) CHECK(grid.node(j) > grid.node(j - 1));
      // Never further than half a cell from the cell midpoint.
      CHECK(std::abs(grid.node(j) - (static_cast<double>(j) + 0.5) /
                                        static_cast<double>(length)) <=
            0.5 / static_cast<double>(length) + 1e-15);
    }
  }
}

TEST_CASE("adequate grid is deterministic in the seed") {
  const Grid a = sample_adequate_grid(100, 42);
  const Grid b = sample_adequate_grid(100, 42);
  const Grid c = sample_adequate_grid(100, 43);
  CHECK(a == b);
  CHECK(!(a == c));
}

TEST_CASE("zero-length grid is rejected") {
  CHECK_THROWS_AS(sample_adequate_grid(0, 1), std::invalid_argument);
}

TEST_CASE("grid constructor validates the cell condition") {
  Vector bad(2);
  bad << 0.6, 0.9;  // first node outside [0, 0.5]
  CHECK_THROWS_AS((void)Grid(bad), std::invalid_argument);
  Vector decreasing(2);
  decreasing << 0.4, 0.3;
  CHECK_THROWS_AS((void)Grid(decreasing), std::invalid_argument);
}

TEST_CASE("inner product of the constant function is exactly one") {
  for (Index length : {1, 7, 100}) {
    const Grid grid = sample_adequate_grid(length, 3);
    const Vector ones = Vector::Ones(length);
    CHECK(inner_product(ones, ones, grid) == 1.0);
  }
}

TEST_CASE("quadrature reproduces analytic Fourier integrals") {
  const Grid grid = sample_adequate_grid(100, 11);
  Vector s(100), c(100);
  for (Index i = 0; i < 100; ++i) {
    s[i] = std::sqrt(2.0) * std::sin(2.0 * kPi * grid.node(i));
    c[i] = std::sqrt(2.0) * std::cos(2.0 * kPi * grid.node(i));
  }
  CHECK(inner_product(s, s, grid) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(inner_product(s, c, grid)) < 0.05);
}

TEST_CASE("inner product is symmetric and bilinear") {
  const Grid grid = sample_adequate_grid(31, 5);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  Vector f(31), g(31), h(31);
  for (Index i = 0; i < 31; ++i) {
    f[i] = gauss(rng);
    g[i] = gauss(rng);
    h[i] = gauss(rng);
  }
  CHECK(inner_product(f, g, grid) == doctest::Approx(inner_product(g, f, grid)));
  CHECK(inner_product((2.0 * f + h).eval(), g, grid) ==
        doctest::Approx(2.0 * inner_product(f, g, grid) +
                        inner_product(h, g, grid)));
  CHECK(inner_product(f, f, grid) >= 0.0);
}

TEST_CASE("inner product rejects length mismatches") {
  const Grid grid = sample_adequate_grid(10, 1);
  CHECK_THROWS_AS(inner_product(Vector::Ones(9), Vector::Ones(10), grid),
                  std::invalid_argument);
}

TEST_CASE("gram_schmidt leaves an orthonormal set unchanged") {
  const Grid grid = sample_adequate_grid(50, 2);
  Vector e1 = Vector::Zero(50), e2 = Vector::Zero(50);
  e1[0] = std::sqrt(50.0);  // unit quadrature norm
  e2[1] = std::sqrt(50.0);
  const auto out = gram_schmidt(std::vector<Vector>{e1, e2}, grid);
  CHECK((out[0] - e1).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((out[1] - e2).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("gram_schmidt output is orthonormal") {
  const Grid grid = sample_adequate_grid(40, 8);
  std::mt19937_64 rng(21);
  std::normal_distribution<double> gauss;
  std::vector<Vector> fs;
  for (int k = 0; k < 4; ++k) {
    Vector f(40);
    for (Index i = 0; i < 40; ++i) f[i] = gauss(rng);
    fs.push_back(f);
  }
  const auto out = gram_schmidt(fs, grid);
  for (std::size_t a = 0; a < out.size(); ++a) {
    CHECK(std::abs(grid_norm(out[a], grid) - 1.0) <= 1e-10);
    for (std::size_t b = 0; b < a; ++b) {
      CHECK(std::abs(inner_product(out[a], out[b], grid)) <= 1e-10);
    }
  }
}

TEST_CASE("gram matrix of the orthogonalized M2 generators is the identity") {
  const Grid grid = sample_adequate_grid(100, 33);
  Matrix fs(100, 5);
  for (Index i = 0; i < 100; ++i) {
    const double t = grid.node(i);
    fs(i, 0) = 5.0 * t * std::sin(2.0 * kPi * t);
    fs(i, 1) = t * std::cos(2.0 * kPi * t) - 3.0;
    fs(i, 2) = 5.0 * t + std::sin(2.0 * kPi * t) - 2.0;
    fs(i, 3) = std::cos(4.0 * kPi * t) + 0.25 * t * t;
    fs(i, 4) = 6.0 * t * (1.0 - t);
  }
  const Matrix basis = gram_schmidt(fs, grid);
  // Direct recomputation of the Gram matrix.
  Matrix gram(5, 5);
  for (Index a = 0; a < 5; ++a) {
    for (Index b = 0; b < 5; ++b) {
      gram(a, b) = inner_product(basis.col(a), basis.col(b), grid);
    }
  }
  CHECK((gram - Matrix::Identity(5, 5)).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("gram_schmidt flags numerically dependent inputs") {
  const Grid grid = sample_adequate_grid(30, 4);
  Vector f = Vector::LinSpaced(30, 0.0, 1.0);
  Vector g = 2.0 * f;
  CHECK_THROWS_AS(gram_schmidt(std::vector<Vector>{f, g}, grid),
                  degenerate_basis_error);
}
