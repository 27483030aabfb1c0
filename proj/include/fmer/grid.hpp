#pragma once

#include <cstdint>
#include <vector>

#include "fmer/errors.hpp"
#include "fmer/types.hpp"

namespace fmer {

/// Observation grid on [0,1]: L strictly increasing nodes, node j lying in
/// the cell [(j-1)/L, j/L]. Every node carries quadrature weight 1/L.
class Grid {
 public:
  explicit Grid(Vector nodes);

  Index size() const { return nodes_.size(); }
  double node(Index j) const { return nodes_[j]; }
  const Vector& nodes() const { return nodes_; }
  double weight() const { return 1.0 / static_cast<double>(nodes_.size()); }

  bool operator==(const Grid& other) const {
    return nodes_.size() == other.nodes_.size() &&
           (nodes_.array() == other.nodes_.array()).all();
  }

 private:
  Vector nodes_;
};

/// n curves observed on a common grid; row i holds curve i's node values.
struct CurveSet {
  Matrix data;  // n x L
  Grid grid;

  CurveSet(Matrix d, Grid g);

  Index n() const { return data.rows(); }
  Index length() const { return data.cols(); }
};

/// Draws node j uniformly from its cell [(j-1)/L, j/L). Deterministic in seed.
Grid sample_adequate_grid(Index length, std::uint64_t seed);

/// Riemann quadrature inner product (1/L) * sum_j f_j g_j.
template <typename DerivedF, typename DerivedG>
double inner_product(const Eigen::MatrixBase<DerivedF>& f,
                     const Eigen::MatrixBase<DerivedG>& g, const Grid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size()) {
    throw std::invalid_argument("inner_product: length mismatch with grid");
  }
  return f.dot(g) * grid.weight();
}

template <typename Derived>
double grid_norm(const Eigen::MatrixBase<Derived>& f, const Grid& grid) {
  return std::sqrt(inner_product(f, f, grid));
}

/// Modified Gram-Schmidt with iterated re-orthogonalization. Preserves the
/// processing order and the span; output is orthonormal under the grid
/// quadrature. A projection residual with norm below `tol` means the inputs
/// are numerically dependent.
std::vector<Vector> gram_schmidt(const std::vector<Vector>& fs,
                                 const Grid& grid, double tol = 1e-10);

/// Column-wise variant; columns are the functions.
Matrix gram_schmidt(const Matrix& fs, const Grid& grid, double tol = 1e-10);

}  // namespace fmer
