#include "fmer/grid.hpp"

#include <cmath>
#include <random>

namespace fmer {

Grid::Grid(Vector nodes) : nodes_(std::move(nodes)) {
  const Index length = nodes_.size();
  if (length < 1) throw std::invalid_argument("Grid: needs at least one node");
  const double cell = 1.0 / static_cast<double>(length);
  for (Index j = 0; j < length; ++j) {
    if (j > 0 && !(nodes_[j] > nodes_[j - 1])) {
      throw std::invalid_argument("Grid: nodes must be strictly increasing");
    }
    const double lo = static_cast<double>(j) * cell;
    const double hi = static_cast<double>(j + 1) * cell;
    if (nodes_[j] < lo || nodes_[j] > hi) {
      throw std::invalid_argument("Grid: node " + std::to_string(j + 1) +
                                  " outside its cell [(j-1)/L, j/L]");
    }
  }
}

CurveSet::CurveSet(Matrix d, Grid g) : data(std::move(d)), grid(std::move(g)) {
  if (data.cols() != grid.size()) {
    throw std::invalid_argument("CurveSet: curve length must equal grid size");
  }
}

Grid sample_adequate_grid(Index length, std::uint64_t seed) {
  if (length < 1) {
    throw std::invalid_argument("sample_adequate_grid: L must be positive");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector nodes(length);
  const double cell = 1.0 / static_cast<double>(length);
  for (Index j = 0; j < length; ++j) {
    nodes[j] = (static_cast<double>(j) + unit(rng)) * cell;
  }
  return Grid(std::move(nodes));
}

namespace {

// Re-orthogonalize until the norm stops shrinking (Daniel--Gragg--Kaufman
// criterion). Two passes suffice except for nearly dependent inputs.
Vector orthogonalize_against(Vector v, const std::vector<Vector>& basis,
                             const Grid& grid) {
  constexpr int kMaxPasses = 4;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    const double before = grid_norm(v, grid);
    for (const Vector& e : basis) {
      v -= inner_product(v, e, grid) * e;
    }
    const double after = grid_norm(v, grid);
    if (after > 0.7071 * before) break;
  }
  return v;
}

}  // namespace

std::vector<Vector> gram_schmidt(const std::vector<Vector>& fs,
                                 const Grid& grid, double tol) {
  std::vector<Vector> out;
  out.reserve(fs.size());
  for (std::size_t k = 0; k < fs.size(); ++k) {
    if (fs[k].size() != grid.size()) {
      throw std::invalid_argument("gram_schmidt: function length mismatch");
    }
    Vector v = orthogonalize_against(fs[k], out, grid);
    const double norm = grid_norm(v, grid);
    if (norm < tol) {
      throw degenerate_basis_error(
          "gram_schmidt: input " + std::to_string(k + 1) +
          " is numerically dependent on its predecessors (residual norm " +
          std::to_string(norm) + ")");
    }
    out.push_back(v / norm);
  }
  return out;
}

Matrix gram_schmidt(const Matrix& fs, const Grid& grid, double tol) {
  std::vector<Vector> cols;
  cols.reserve(static_cast<std::size_t>(fs.cols()));
  for (Index j = 0; j < fs.cols(); ++j) cols.push_back(fs.col(j));
  const std::vector<Vector> ortho = gram_schmidt(cols, grid, tol);
  Matrix out(fs.rows(), fs.cols());
  for (Index j = 0; j < fs.cols(); ++j) out.col(j) = ortho[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace fmer
