#pragma once

#include <filesystem>
#include <string>

#include "fmer/grid.hpp"
#include "fmer/types.hpp"

namespace fmer::io {

/// Formats with 17 significant digits so values round-trip bit-exactly.
std::string format_number(double value);

/// Writes content to a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// CurveSet CSV: first row holds the grid nodes, each further row one curve.
/// Nodes outside [0,1] are rescaled affinely onto [0,1] on read.
void write_curve_set(const std::filesystem::path& path, const CurveSet& curves);
CurveSet read_curve_set(const std::filesystem::path& path);

/// Square CSV without header (covariance matrices, fit kernels).
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// One value per line.
void write_vector(const std::filesystem::path& path, const Vector& v);
Vector read_vector(const std::filesystem::path& path);

}  // namespace fmer::io
