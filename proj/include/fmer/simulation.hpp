#pragma once

#include <cstdint>
#include <string>

#include "fmer/grid.hpp"
#include "fmer/types.hpp"

namespace fmer {

enum class BasisFamily {
  fourier,                  // 1, sqrt2 sin(2 pi t), sqrt2 cos(2 pi t), ...
  gram_schmidt_m2,          // orthogonalized M2 generators
  legendre_m3,              // normalized shifted Legendre polynomials
  fourier_extended_m4,      // fourier continued to higher frequencies
  gram_schmidt_extended_m5, // M2 generators plus monomials t^{j-3}
  legendre_extended_m6,     // M3 polynomials plus monomials t^{j-1}
  custom,
};

/// Full description of a simulated covariate/response scenario.
struct ModelSpec {
  std::string name;
  BasisFamily family = BasisFamily::fourier;
  Index rank = 0;
  Vector eigenvalues;             // positive, non-increasing, size rank
  Vector slope_coefficients;      // on the basis; size <= rank
  Matrix quadratic_coefficients;  // r x r symmetric basis coefficients; empty = linear
  double response_noise = 1.0;    // sd of the regression error
  Matrix custom_basis;            // L x rank when family == custom
};

enum class ErrorKind { banded, iid, none };

/// Measurement-error process: banded (triangular eigenfunctions on disjoint
/// supports), i.i.d. node noise, or absent.
struct ErrorSpec {
  ErrorKind kind = ErrorKind::none;
  double delta = 0.0;   // banded support width
  Vector gammas;        // banded eigenvalues, size floor(1/delta)
  double variance = 0.0;  // iid node variance
};

ErrorSpec no_error();
ErrorSpec iid_error(double variance);
/// Canonical banded process: gamma_1 = 0.09, the rest equispaced from 0.04
/// down to 0.01 across D = floor(1/delta) components.
ErrorSpec banded_error(double delta);

struct SimulatedData {
  CurveSet x;
  CurveSet u;
  CurveSet w;
  Vector y;
  Vector slope;             // true slope sampled on the grid
  Matrix quadratic_slope;   // true quadratic kernel (empty for linear models)
  double intercept = 0.0;
};

/// r values equispaced from hi down to lo; r = 1 gives {hi}.
Vector eigenvalue_schedule(Index r, double hi, double lo);

/// Head schedule continued by the power-law tail coeff * (j - head)^{-4}
/// up to total length 20 (the essentially-finite-rank models).
Vector extended_eigenvalue_schedule(Index head, double hi, double lo,
                                    double coeff);

/// Canonical model presets.
ModelSpec model_m1();
ModelSpec model_m2();
ModelSpec model_m3();
ModelSpec model_m4();
ModelSpec model_m5();
ModelSpec model_m6();
ModelSpec model_by_name(const std::string& name);

/// Orthonormal basis of the model family sampled on the grid (L x rank).
Matrix make_basis(const ModelSpec& spec, const Grid& grid);

/// D = floor(1/delta) unit-norm tent functions on disjoint supports
/// [(l-1) delta, l delta], height sqrt(3/delta).
Matrix triangular_error_basis(double delta, const Grid& grid);

/// True slope as a grid function: sum_j c_j eta_j.
Vector slope_for_model(const ModelSpec& spec, const Grid& grid);

/// Karhunen-Loeve simulation: X from the model spec with standard normal
/// scores, U from the error spec, W = X + U, and the scalar response
/// y = <X, beta> (+ <X (x) X, B> when quadratic) + noise. Deterministic in seed.
SimulatedData simulate(const ModelSpec& model, const ErrorSpec& err, Index n,
                       const Grid& grid, std::uint64_t seed);

}  // namespace fmer
