#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dstack {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  std::vector<std::vector<double>> to_rows() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows_in) {
  Matrix m;
  m.rows = rows_in.size();
  m.cols = rows_in.empty() ? 0 : rows_in.front().size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rows_in) m.data.insert(m.data.end(), r.begin(), r.end());
  return m;
}

inline std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r].assign(data.begin() + r * cols, data.begin() + (r + 1) * cols);
  return out;
}

}  // namespace dstack
