#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace fedxfer {

/// Dense row-major matrix of 64-bit floats. The workhorse for batches of
/// samples (rows) and layer weights.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const Matrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }

  std::string shape_str() const;
  bool all_finite() const;
};

/// a (m×k) times b (k×n). Throws a dimension error naming both shapes when
/// the inner dimensions disagree.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

/// Copies the listed rows of `a`, in order.
Matrix select_rows(const Matrix& a, const std::vector<std::uint32_t>& rows);

/// Copies the listed columns of `a`, in order.
Matrix select_cols(const Matrix& a, const std::vector<std::uint32_t>& cols);

double frobenius_norm_sq(const Matrix& a);

}  // namespace fedxfer
