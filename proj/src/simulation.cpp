#include "fmer/simulation.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace fmer {

namespace {

constexpr double kPi = std::numbers::pi;

Vector padded_coefficients(const ModelSpec& spec) {
  if (spec.slope_coefficients.size() > spec.rank) {
    throw std::invalid_argument("ModelSpec: more slope coefficients than rank");
  }
  Vector c = Vector::Zero(spec.rank);
  c.head(spec.slope_coefficients.size()) = spec.slope_coefficients;
  return c;
}

Vector coeffs(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Generators f_1..f_5 of the M2 family.
Matrix m2_generators(const Grid& grid, Index count) {
  const Index size = grid.size();
  Matrix fs(size, count);
  for (Index i = 0; i < size; ++i) {
    const double t = grid.node(i);
    double values[5] = {
        5.0 * t * std::sin(2.0 * kPi * t),
        t * std::cos(2.0 * kPi * t) - 3.0,
        5.0 * t + std::sin(2.0 * kPi * t) - 2.0,
        std::cos(4.0 * kPi * t) + 0.25 * t * t,
        6.0 * t * (1.0 - t),
    };
    for (Index j = 0; j < count; ++j) fs(i, j) = values[j];
  }
  return fs;
}

// First five shifted Legendre polynomials (value 1 at t = 1).
double shifted_legendre(Index k, double t) {
  switch (k) {
    case 0: return 1.0;
    case 1: return 2.0 * t - 1.0;
    case 2: return 6.0 * t * t - 6.0 * t + 1.0;
    case 3: return ((20.0 * t - 30.0) * t + 12.0) * t - 1.0;
    case 4: return (((70.0 * t - 140.0) * t + 90.0) * t - 20.0) * t + 1.0;
    default:
      throw std::invalid_argument("shifted_legendre: only orders 0..4");
  }
}

Matrix fourier_basis(const Grid& grid, Index rank) {
  const Index size = grid.size();
  Matrix basis(size, rank);
  for (Index i = 0; i < size; ++i) {
    const double t = grid.node(i);
    for (Index j = 0; j < rank; ++j) {
      if (j == 0) {
        basis(i, j) = 1.0;
      } else {
        const double freq = 2.0 * kPi * static_cast<double>((j + 1) / 2);
        basis(i, j) = std::sqrt(2.0) *
                      ((j % 2 == 1) ? std::sin(freq * t) : std::cos(freq * t));
      }
    }
  }
  return basis;
}

// Monomial tails of the extended Gram-Schmidt families push the inputs close
// to numerical dependence; the relaxed tolerance keeps the orthogonalization
// going where the default would flag degeneracy.
constexpr double kExtendedBasisTol = 1e-14;

}  // namespace

ErrorSpec no_error() { return ErrorSpec{}; }

ErrorSpec iid_error(double variance) {
  if (variance < 0.0) {
    throw std::invalid_argument("iid_error: variance must be nonnegative");
  }
  ErrorSpec spec;
  spec.kind = ErrorKind::iid;
  spec.variance = variance;
  return spec;
}

ErrorSpec banded_error(double delta) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("banded_error: delta must lie in (0, 1]");
  }
  ErrorSpec spec;
  spec.kind = ErrorKind::banded;
  spec.delta = delta;
  const Index d = static_cast<Index>(std::floor(1.0 / delta));
  spec.gammas = Vector(d);
  spec.gammas[0] = 0.09;
  if (d > 1) spec.gammas.tail(d - 1) = eigenvalue_schedule(d - 1, 0.04, 0.01);
  return spec;
}

Vector eigenvalue_schedule(Index r, double hi, double lo) {
  if (r < 1) throw std::invalid_argument("eigenvalue_schedule: r must be >= 1");
  if (!(hi > lo) || !(lo > 0.0)) {
    throw std::invalid_argument("eigenvalue_schedule: need hi > lo > 0");
  }
  Vector v(r);
  if (r == 1) {
    v[0] = hi;
    return v;
  }
  const double step = (hi - lo) / static_cast<double>(r - 1);
  for (Index j = 0; j < r; ++j) v[j] = hi - step * static_cast<double>(j);
  return v;
}

Vector extended_eigenvalue_schedule(Index head, double hi, double lo,
                                    double coeff) {
  constexpr Index kTotal = 20;
  Vector v(kTotal);
  v.head(head) = eigenvalue_schedule(head, hi, lo);
  for (Index j = head; j < kTotal; ++j) {
    const double k = static_cast<double>(j + 1 - head);
    v[j] = coeff / (k * k * k * k);
  }
  return v;
}

ModelSpec model_m1() {
  ModelSpec spec;
  spec.name = "m1";
  spec.family = BasisFamily::fourier;
  spec.rank = 3;
  spec.eigenvalues = eigenvalue_schedule(3, 1.5, 0.3);
  spec.slope_coefficients = coeffs({1.0, 1.0, -1.0});
  return spec;
}

ModelSpec model_m2() {
  ModelSpec spec;
  spec.name = "m2";
  spec.family = BasisFamily::gram_schmidt_m2;
  spec.rank = 5;
  spec.eigenvalues = eigenvalue_schedule(5, 1.5, 0.3);
  spec.slope_coefficients = coeffs({-0.4, 2.0, -1.0, 1.0, -0.7});
  return spec;
}

ModelSpec model_m3() {
  ModelSpec spec;
  spec.name = "m3";
  spec.family = BasisFamily::legendre_m3;
  spec.rank = 5;
  spec.eigenvalues = eigenvalue_schedule(5, 1.5, 0.3);
  spec.slope_coefficients = coeffs({0.7, 3.0, 0.0, -1.0, 0.5});
  return spec;
}

ModelSpec model_m4() {
  ModelSpec spec;
  spec.name = "m4";
  spec.family = BasisFamily::fourier_extended_m4;
  spec.rank = 20;
  spec.eigenvalues = extended_eigenvalue_schedule(3, 1.5, 0.3, 0.1421);
  spec.slope_coefficients = coeffs({1.0, 1.0, -1.0, -1.0, 0.5});
  return spec;
}

ModelSpec model_m5() {
  ModelSpec spec;
  spec.name = "m5";
  spec.family = BasisFamily::gram_schmidt_extended_m5;
  spec.rank = 20;
  spec.eigenvalues = extended_eigenvalue_schedule(5, 1.5, 0.3, 0.2368);
  spec.slope_coefficients = coeffs({-0.4, 2.0, -1.0, 1.0, -0.7, 0.5, -0.3});
  return spec;
}

ModelSpec model_m6() {
  ModelSpec spec;
  spec.name = "m6";
  spec.family = BasisFamily::legendre_extended_m6;
  spec.rank = 20;
  spec.eigenvalues = extended_eigenvalue_schedule(5, 1.5, 0.3, 0.2368);
  spec.slope_coefficients = coeffs({0.7, 3.0, 0.0, -1.0, 0.5, 0.0, 0.3});
  return spec;
}

ModelSpec model_by_name(const std::string& name) {
  if (name == "m1") return model_m1();
  if (name == "m2") return model_m2();
  if (name == "m3") return model_m3();
  if (name == "m4") return model_m4();
  if (name == "m5") return model_m5();
  if (name == "m6") return model_m6();
  throw std::invalid_argument("unknown model name: " + name);
}

Matrix make_basis(const ModelSpec& spec, const Grid& grid) {
  const Index size = grid.size();
  const Index rank = spec.rank;
  if (rank < 1) throw std::invalid_argument("make_basis: rank must be >= 1");

  switch (spec.family) {
    case BasisFamily::fourier:
    case BasisFamily::fourier_extended_m4:
      return fourier_basis(grid, rank);

    case BasisFamily::gram_schmidt_m2: {
      if (rank > 5) {
        throw std::invalid_argument("make_basis: m2 family has five generators");
      }
      return gram_schmidt(m2_generators(grid, rank), grid);
    }

    case BasisFamily::legendre_m3: {
      if (rank > 5) {
        throw std::invalid_argument("make_basis: m3 family lists five polynomials");
      }
      Matrix basis(size, rank);
      for (Index j = 0; j < rank; ++j) {
        const double norm = std::sqrt(2.0 * static_cast<double>(j) + 1.0);
        for (Index i = 0; i < size; ++i) {
          basis(i, j) = norm * shifted_legendre(j, grid.node(i));
        }
      }
      return basis;
    }

    case BasisFamily::gram_schmidt_extended_m5: {
      Matrix fs(size, rank);
      const Index head = std::min<Index>(rank, 5);
      fs.leftCols(head) = m2_generators(grid, head);
      for (Index j = 5; j < rank; ++j) {
        const double power = static_cast<double>(j + 1 - 3);  // t^{j-3}, j 1-based
        for (Index i = 0; i < size; ++i) {
          fs(i, j) = std::pow(grid.node(i), power);
        }
      }
      return gram_schmidt(fs, grid, kExtendedBasisTol);
    }

    case BasisFamily::legendre_extended_m6: {
      Matrix fs(size, rank);
      const Index head = std::min<Index>(rank, 5);
      for (Index j = 0; j < head; ++j) {
        for (Index i = 0; i < size; ++i) {
          fs(i, j) = shifted_legendre(j, grid.node(i));
        }
      }
      for (Index j = 5; j < rank; ++j) {
        const double power = static_cast<double>(j + 1 - 1);  // t^{j-1}, j 1-based
        for (Index i = 0; i < size; ++i) {
          fs(i, j) = std::pow(grid.node(i), power);
        }
      }
      return gram_schmidt(fs, grid, kExtendedBasisTol);
    }

    case BasisFamily::custom: {
      if (spec.custom_basis.rows() != size || spec.custom_basis.cols() != rank) {
        throw std::invalid_argument("make_basis: custom basis shape mismatch");
      }
      return spec.custom_basis;
    }
  }
  throw std::invalid_argument("make_basis: unsupported family");
}

Matrix triangular_error_basis(double delta, const Grid& grid) {
  if (!(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument(
        "triangular_error_basis: delta must lie in (0, 1]");
  }
  const Index d = static_cast<Index>(std::floor(1.0 / delta));
  const double height = std::sqrt(3.0 / delta);
  Matrix basis = Matrix::Zero(grid.size(), d);
  for (Index l = 0; l < d; ++l) {
    const double center = (static_cast<double>(l) + 0.5) * delta;
    for (Index i = 0; i < grid.size(); ++i) {
      const double dist = std::abs(grid.node(i) - center);
      basis(i, l) = height * std::max(0.0, 1.0 - 2.0 * dist / delta);
    }
  }
  return basis;
}

Vector slope_for_model(const ModelSpec& spec, const Grid& grid) {
  return make_basis(spec, grid) * padded_coefficients(spec);
}

SimulatedData simulate(const ModelSpec& model, const ErrorSpec& err, Index n,
                       const Grid& grid, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate: n must be positive");
  if (model.eigenvalues.size() != model.rank) {
    throw std::invalid_argument("simulate: eigenvalue count must equal rank");
  }
  for (Index j = 0; j + 1 < model.rank; ++j) {
    if (model.eigenvalues[j] < model.eigenvalues[j + 1]) {
      throw std::invalid_argument("simulate: eigenvalues must be non-increasing");
    }
  }
  if (model.eigenvalues.size() > 0 && model.eigenvalues.minCoeff() <= 0.0) {
    throw std::invalid_argument("simulate: eigenvalues must be positive");
  }

  const Index size = grid.size();
  const Matrix basis = make_basis(model, grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix scores(n, model.rank);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < model.rank; ++j) scores(i, j) = gauss(rng);
  }
  const Vector sqrt_lambda = model.eigenvalues.cwiseSqrt();
  Matrix x = (scores * sqrt_lambda.asDiagonal()) * basis.transpose();

  Matrix u = Matrix::Zero(n, size);
  if (err.kind == ErrorKind::banded) {
    const Matrix tents = triangular_error_basis(err.delta, grid);
    if (err.gammas.size() != tents.cols()) {
      throw std::invalid_argument(
          "simulate: banded error needs floor(1/delta) eigenvalues");
    }
    if (err.gammas.minCoeff() <= 0.0) {
      throw std::invalid_argument("simulate: banded eigenvalues must be positive");
    }
    Matrix escores(n, tents.cols());
    for (Index i = 0; i < n; ++i) {
      for (Index l = 0; l < tents.cols(); ++l) escores(i, l) = gauss(rng);
    }
    u = (escores * err.gammas.cwiseSqrt().asDiagonal()) * tents.transpose();
  } else if (err.kind == ErrorKind::iid) {
    const double sd = std::sqrt(err.variance);
    for (Index i = 0; i < n; ++i) {
      for (Index k = 0; k < size; ++k) u(i, k) = sd * gauss(rng);
    }
  }

  SimulatedData data{CurveSet(x, grid), CurveSet(u, grid),
                     CurveSet(x + u, grid), Vector(n),
                     basis * padded_coefficients(model), Matrix(), 0.0};

  const double w = grid.weight();
  Vector signal = data.x.data * data.slope * w;
  if (model.quadratic_coefficients.size() > 0) {
    if (model.quadratic_coefficients.rows() != model.rank ||
        model.quadratic_coefficients.cols() != model.rank) {
      throw std::invalid_argument(
          "simulate: quadratic coefficients must be rank x rank");
    }
    data.quadratic_slope =
        basis * model.quadratic_coefficients * basis.transpose();
    for (Index i = 0; i < n; ++i) {
      const Vector xi = data.x.data.row(i);
      signal[i] += w * w * xi.dot(data.quadratic_slope * xi);
    }
  }
  for (Index i = 0; i < n; ++i) {
    data.y[i] = data.intercept + signal[i] + model.response_noise * gauss(rng);
  }
  return data;
}

}  // namespace fmer
