#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fmer/covariance.hpp"
#include "fmer/rank_selection.hpp"
#include "fmer/regression.hpp"
#include "fmer/simulation.hpp"

using namespace fmer;

namespace {

EigenSystem estimated_system(const CurveSet& w, Index rank, double delta_star) {
  const Matrix khat_w = empirical_covariance(w);
  const CompletionFit fit = minimize_rank_j(
      khat_w, band_mask(w.length(), delta_star), rank, completion_budget());
  return kernel_eigen(fit.completed(), w.grid, rank);
}

}  // namespace

TEST_CASE("cross covariance with a constant response vanishes") {
  const Grid grid = sample_adequate_grid(12, 2);
  const SimulatedData data = simulate(model_m1(), no_error(), 20, grid, 5);
  const Vector y = Vector::Constant(20, 3.5);
  CHECK(cross_cov_scalar(y, data.w).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("cross covariance hand example") {
  const Grid grid = sample_adequate_grid(1, 2);
  Matrix w(2, 1);
  w << 0.0, 2.0;
  Vector y(2);
  y << 0.0, 2.0;
  const Vector c = cross_cov_scalar(y, CurveSet(w, grid));
  CHECK(c[0] == doctest::Approx(1.0));  // (0*0 + 2*2)/2 - 1*1
}

TEST_CASE("cross covariance approaches K_X beta under uncorrelated error") {
  const Grid grid = sample_adequate_grid(40, 61);
  ModelSpec model = model_m1();
  model.response_noise = 0.0;
  const SimulatedData data = simulate(model, banded_error(0.1), 20000, grid, 8);
  const Vector cyw = cross_cov_scalar(data.y, data.w);
  const Matrix basis = make_basis(model, grid);
  // Population identity: cov(y, W) = K_X beta.
  const Matrix kx = basis * model.eigenvalues.asDiagonal() * basis.transpose();
  const Vector truth = kx * data.slope * grid.weight();
  CHECK(grid_norm((cyw - truth).eval(), grid) < 0.05);
}

TEST_CASE("rc_scalar inverts the covariance on its range") {
  const Grid grid = sample_adequate_grid(30, 3);
  const ModelSpec model = model_m1();
  const Matrix basis = make_basis(model, grid);
  Matrix funcs = gram_schmidt(basis, grid);  // exactly orthonormal on the grid
  EigenSystem es{model.eigenvalues, funcs, grid};

  const Vector beta = funcs.col(0) + funcs.col(1) - funcs.col(2);
  // C = K_X beta in spectral form.
  Vector c = Vector::Zero(30);
  for (Index j = 0; j < 3; ++j) {
    c += es.eigenvalues[j] * inner_product(beta, funcs.col(j), grid) *
         funcs.col(j);
  }
  const SlopeFunction fit = rc_scalar(es, c, 0.0, Vector::Zero(30));
  CHECK((fit.beta - beta).lpNorm<Eigen::Infinity>() < 1e-8);

  SUBCASE("orthogonal cross covariance gives the zero slope") {
    Vector ortho = Vector::Ones(30);
    for (Index j = 0; j < 3; ++j) {
      ortho -= inner_product(ortho, funcs.col(j), grid) * funcs.col(j);
    }
    const SlopeFunction zero = rc_scalar(es, ortho, 0.0, Vector::Zero(30));
    CHECK(zero.beta.lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("rc_scalar output stays in the eigensystem span") {
  const Grid grid = sample_adequate_grid(100, 71);
  const SimulatedData data =
      simulate(model_m1(), banded_error(0.05), 100, grid, 23);
  const EigenSystem es = estimated_system(data.w, 3, 0.15);
  const Vector cyw = cross_cov_scalar(data.y, data.w);
  const SlopeFunction fit = rc_scalar(es, cyw, data.y.mean(),
                                      data.w.data.colwise().mean());
  Vector residual = fit.beta;
  for (Index j = 0; j < es.rank(); ++j) {
    residual -= inner_product(fit.beta, es.eigenfunctions.col(j), grid) *
                es.eigenfunctions.col(j);
  }
  CHECK(grid_norm(residual, grid) <= 1e-8);
}

TEST_CASE("M1 pipeline recovers the slope within the reported distance") {
  const Grid grid = sample_adequate_grid(100, 9);
  const SimulatedData data =
      simulate(model_m1(), banded_error(0.05), 100, grid, 42);
  const RankVote vote =
      estimate_rank_mode(data.w, 4, 20, 0.15, 10, 0.01 * 625.0, 6);
  REQUIRE(vote.mode == 3);
  const EigenSystem es = estimated_system(data.w, vote.mode, 0.15);
  const SlopeFunction fit = rc_scalar(es, cross_cov_scalar(data.y, data.w),
                                      data.y.mean(),
                                      data.w.data.colwise().mean());
  CHECK(grid_norm((fit.beta - data.slope).eval(), grid) < 0.5);
}

TEST_CASE("scaling the response scales the slope exactly") {
  const Grid grid = sample_adequate_grid(50, 13);
  const SimulatedData data =
      simulate(model_m2(), banded_error(0.1), 60, grid, 3);
  const EigenSystem es = estimated_system(data.w, 5, 0.15);
  const Vector w_bar = data.w.data.colwise().mean();
  const SlopeFunction fit =
      rc_scalar(es, cross_cov_scalar(data.y, data.w), data.y.mean(), w_bar);
  const Vector doubled = 2.0 * data.y;
  const SlopeFunction fit2 =
      rc_scalar(es, cross_cov_scalar(doubled, data.w), doubled.mean(), w_bar);
  CHECK(((2.0 * fit.beta) - fit2.beta).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("functional rc with identity response acts as identity on the span") {
  const Grid grid = sample_adequate_grid(40, 17);
  ModelSpec model = model_m1();
  const SimulatedData data = simulate(model, no_error(), 400, grid, 29);
  // Eigensystem consistent with the sample covariance, so the cross
  // covariance of y = X with W = X is exactly K acting on it.
  const EigenSystem es =
      kernel_eigen(empirical_covariance(data.x), grid, 3);

  // y_i = X_i: the slope operator is the identity on span{eta_j}.
  const SlopeOperator fit = rc_functional(es, data.x, data.x);
  for (Index j = 0; j < 3; ++j) {
    const Vector image = fit.apply(es.eigenfunctions.col(j));
    CHECK((image - es.eigenfunctions.col(j)).lpNorm<Eigen::Infinity>() < 1e-6);
  }

  SUBCASE("zero response gives the zero operator") {
    const CurveSet zeros(Matrix::Zero(400, 40), grid);
    const SlopeOperator z = rc_functional(es, zeros, data.x);
    CHECK(z.kernel.lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("same inputs give a bit-identical kernel") {
    const SlopeOperator again = rc_functional(es, data.x, data.x);
    CHECK((fit.kernel.array() == again.kernel.array()).all());
  }
}

TEST_CASE("quadratic cross covariance hand example and symmetry") {
  const Grid grid = sample_adequate_grid(1, 2);
  Matrix w(2, 1);
  w << 1.0, 3.0;
  Vector y(2);
  y << 0.0, 2.0;
  const Matrix c = cross_cov_quadratic(y, CurveSet(w, grid));
  CHECK(c(0, 0) == doctest::Approx(4.0));  // (0*1 + 2*9)/2 - 1*(1+9)/2

  const Grid grid2 = sample_adequate_grid(15, 5);
  const SimulatedData data = simulate(model_m1(), no_error(), 40, grid2, 31);
  const Matrix cq = cross_cov_quadratic(data.y, data.w);
  CHECK((cq - cq.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);

  const Vector constant = Vector::Constant(40, 2.0);
  CHECK(cross_cov_quadratic(constant, data.w).lpNorm<Eigen::Infinity>() <
        1e-12);
}

TEST_CASE("rc_quadratic recovers a forward-mapped quadratic slope") {
  const Grid grid = sample_adequate_grid(25, 37);
  Vector lambda(3);
  lambda << 1.5, 0.9, 0.3;
  Matrix funcs = gram_schmidt(make_basis(model_m1(), grid), grid);
  EigenSystem es{lambda, funcs, grid};

  const Matrix b_true = rank_one_kernel(es, 0, 0);  // zeta_11
  const Matrix cyww = var_xx_forward(es).apply(b_true);
  const QuadraticFit fit =
      rc_quadratic(es, Vector::Zero(25), cyww, false, 0.0, Vector::Zero(25),
                   Matrix::Zero(25, 25));
  CHECK((fit.quadratic - b_true).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((fit.quadratic - fit.quadratic.transpose()).lpNorm<Eigen::Infinity>() <
        1e-10);

  SUBCASE("zero cross covariance gives a zero quadratic part") {
    const QuadraticFit z =
        rc_quadratic(es, Vector::Zero(25), Matrix::Zero(25, 25), false, 0.0,
                     Vector::Zero(25), Matrix::Zero(25, 25));
    CHECK(z.quadratic.lpNorm<Eigen::Infinity>() == 0.0);
  }

  SUBCASE("paper coefficients quadruple the kernel") {
    const QuadraticFit p =
        rc_quadratic(es, Vector::Zero(25), cyww, true, 0.0, Vector::Zero(25),
                     Matrix::Zero(25, 25));
    CHECK((p.quadratic - 4.0 * fit.quadratic).lpNorm<Eigen::Infinity>() <
          1e-10);
  }
}

TEST_CASE("spectral truncation coincides with rc when there is no error") {
  const Grid grid = sample_adequate_grid(60, 43);
  ModelSpec model = model_m1();
  const SimulatedData data = simulate(model, no_error(), 150, grid, 12);

  const SlopeFunction st = spectral_truncation(data.w, data.y, 3);
  // Same eigensystem, no completion step: the estimators are the same map.
  const EigenSystem es = kernel_eigen(empirical_covariance(data.w), grid, 3);
  const SlopeFunction rc = rc_scalar(es, cross_cov_scalar(data.y, data.w),
                                     data.y.mean(),
                                     data.w.data.colwise().mean());
  CHECK((st.beta - rc.beta).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(st.intercept == doctest::Approx(rc.intercept));
}

TEST_CASE("one-component truncation misses an orthogonal slope") {
  const Grid grid = sample_adequate_grid(50, 47);
  ModelSpec model = model_m1();
  // Response loads only on the second component; eta_1 dominates variance.
  model.slope_coefficients = Vector::Zero(3);
  model.slope_coefficients[1] = 1.0;
  model.response_noise = 0.0;
  const SimulatedData data = simulate(model, no_error(), 4000, grid, 53);
  const SlopeFunction st = spectral_truncation(data.w, data.y, 1);
  CHECK(grid_norm(st.beta, grid) < 0.1);
}

TEST_CASE("spectral truncation rejects ranks beyond the positive spectrum") {
  const Grid grid = sample_adequate_grid(10, 3);
  const SimulatedData data = simulate(model_m1(), no_error(), 3, grid, 2);
  // Covariance rank is at most n - 1 = 2 after centering.
  CHECK_THROWS_AS(spectral_truncation(data.w, data.y, 5), rank_deficient_error);
}

TEST_CASE("cross validation picks one component for a one-component covariate") {
  const Grid grid = sample_adequate_grid(40, 59);
  ModelSpec model;
  model.name = "rank1";
  model.family = BasisFamily::fourier;
  model.rank = 1;
  model.eigenvalues = Vector::Constant(1, 1.5);
  model.slope_coefficients = Vector::Constant(1, 2.0);
  model.response_noise = 0.0;
  const SimulatedData data = simulate(model, no_error(), 80, grid, 67);
  const Index k = cv_select_components(data.w, data.y, 6, 60, 5);
  CHECK(k == 1);
  CHECK(cv_select_components(data.w, data.y, 6, 60, 5) == k);  // deterministic
}

TEST_CASE("predictions honor intercepts and close the loop on exact fits") {
  const Grid grid = sample_adequate_grid(30, 73);
  ModelSpec model = model_m1();
  model.response_noise = 0.0;
  const SimulatedData data = simulate(model, no_error(), 200, grid, 81);

  SUBCASE("zero slope predicts the intercept") {
    SlopeFunction constant{Vector::Zero(30), 2.5, grid};
    const Vector pred = predict(constant, data.w);
    CHECK((pred.array() - 2.5).abs().maxCoeff() < 1e-15);
  }

  SUBCASE("noise-free training data is reproduced") {
    const EigenSystem es = kernel_eigen(empirical_covariance(data.w), grid, 3);
    const SlopeFunction fit = rc_scalar(es, cross_cov_scalar(data.y, data.w),
                                        data.y.mean(),
                                        data.w.data.colwise().mean());
    const Vector pred = predict(fit, data.w);
    CHECK((pred - data.y).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(r_squared(data.y, pred) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("grid quadrature matches a refined-grid integral at rate 1/L") {
  // Smooth integrand: W(t) = exp(t), beta(t) = sin(2 pi t).
  auto integral_on = [](Index length) {
    const Grid grid = sample_adequate_grid(length, 97);
    Vector w(length), beta(length);
    for (Index i = 0; i < length; ++i) {
      w[i] = std::exp(grid.node(i));
      beta[i] = std::sin(2.0 * std::numbers::pi * grid.node(i));
    }
    return inner_product(w, beta, grid);
  };
  const double fine = integral_on(200000);
  CHECK(std::abs(integral_on(50) - fine) < 5.0 / 50.0);
  CHECK(std::abs(integral_on(500) - fine) < 5.0 / 500.0);
}

TEST_CASE("quadratic predictions add the quadratic form") {
  const Grid grid = sample_adequate_grid(20, 89);
  ModelSpec model = model_m1();
  model.quadratic_coefficients = Matrix::Zero(3, 3);
  model.quadratic_coefficients(0, 1) = 1.0;
  model.quadratic_coefficients(1, 0) = 1.0;
  model.response_noise = 0.0;
  const SimulatedData data = simulate(model, no_error(), 50, grid, 91);

  QuadraticFit fit{SlopeFunction{data.slope, 0.0, grid}, data.quadratic_slope};
  const Vector pred = predict(fit, data.x);
  CHECK((pred - data.y).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("r_squared endpoints") {
  Vector actual(4);
  actual << 1.0, 2.0, 3.0, 4.0;
  CHECK(r_squared(actual, actual) == doctest::Approx(1.0));
  CHECK(r_squared(actual, Vector::Constant(4, actual.mean())) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(r_squared(Vector::Ones(3), Vector::Ones(3)),
                  undefined_metric_error);

  const Grid grid = sample_adequate_grid(5, 7);
  Matrix curves(3, 5);
  curves << 1, 2, 3, 4, 5, 2, 3, 4, 5, 6, 3, 4, 5, 6, 7;
  const CurveSet set(curves, grid);
  CHECK(r_squared(set, curves) == doctest::Approx(1.0));
  const Vector mean_curve = curves.colwise().mean();
  Matrix mean_pred(3, 5);
  mean_pred.rowwise() = mean_curve.transpose();
  CHECK(r_squared(set, mean_pred) == doctest::Approx(0.0));
}
