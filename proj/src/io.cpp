#include "fmer/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace fmer::io {

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t row) {
  std::vector<double> values;
  std::size_t pos = 0, col = 1;
  while (pos <= line.size()) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) next = line.size();
    const std::string cell = line.substr(pos, next - pos);
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      while (used < cell.size() &&
             (cell[used] == ' ' || cell[used] == '\r')) {
        ++used;
      }
      if (used != cell.size()) throw std::invalid_argument("trailing junk");
      values.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("CSV parse error at row " + std::to_string(row) +
                               ", column " + std::to_string(col) + ": '" +
                               cell + "'");
    }
    pos = next + 1;
    ++col;
    if (next == line.size()) break;
  }
  return values;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      ++row;
      continue;
    }
    rows.push_back(parse_row(line, row));
    if (rows.back().size() != rows.front().size()) {
      throw std::runtime_error("CSV parse error at row " + std::to_string(row) +
                               ": expected " +
                               std::to_string(rows.front().size()) +
                               " columns, found " +
                               std::to_string(rows.back().size()));
    }
    ++row;
  }
  if (rows.empty()) throw std::runtime_error("empty CSV file: " + path.string());
  return rows;
}

std::string render_rows(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 20);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void atomic_write(const std::filesystem::path& path,
                  const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_curve_set(const std::filesystem::path& path,
                     const CurveSet& curves) {
  std::string content;
  for (Index j = 0; j < curves.grid.size(); ++j) {
    if (j > 0) content += ',';
    content += format_number(curves.grid.node(j));
  }
  content += '\n';
  content += render_rows(curves.data);
  atomic_write(path, content);
}

CurveSet read_curve_set(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.size() < 2) {
    throw std::runtime_error("curve CSV needs a node row and at least one curve: " +
                             path.string());
  }
  const Index length = static_cast<Index>(rows.front().size());
  Vector nodes(length);
  for (Index j = 0; j < length; ++j) nodes[j] = rows.front()[static_cast<std::size_t>(j)];
  const double lo = nodes.minCoeff();
  const double hi = nodes.maxCoeff();
  if (lo < 0.0 || hi > 1.0) {
    nodes = (nodes.array() - lo) / (hi - lo);
  }
  Matrix data(static_cast<Index>(rows.size()) - 1, length);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (Index j = 0; j < length; ++j) {
      data(static_cast<Index>(i) - 1, j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return CurveSet(std::move(data), Grid(std::move(nodes)));
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  atomic_write(path, render_rows(m));
}

Matrix read_matrix(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  std::string content;
  for (Index i = 0; i < v.size(); ++i) {
    content += format_number(v[i]);
    content += '\n';
  }
  atomic_write(path, content);
}

Vector read_vector(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  Vector v(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 1) {
      throw std::runtime_error("expected one value per line in " +
                               path.string());
    }
    v[static_cast<Index>(i)] = rows[i][0];
  }
  return v;
}

}  // namespace fmer::io
