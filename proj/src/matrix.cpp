#include "fedxfer/matrix.hpp"

#include <cmath>

#include "fedxfer/error.hpp"

namespace fedxfer {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rws) {
  Matrix m;
  m.rows = rws.size();
  m.cols = rws.size() ? rws.begin()->size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rws) {
    if (r.size() != m.cols) {
      fail(ErrorCode::dimension_mismatch, "from_rows: ragged row lengths");
    }
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    fail(ErrorCode::dimension_mismatch,
         "matmul: inner dimensions disagree, " + a.shape_str() + " * " + b.shape_str());
  }
  Matrix out(a.rows, b.cols);
  // ikj order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) {
        orow[j] += aik * brow[j];
      }
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      out.at(j, i) = a.at(i, j);
    }
  }
  return out;
}

Matrix select_rows(const Matrix& a, const std::vector<std::uint32_t>& rows) {
  Matrix out(rows.size(), a.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows) {
      fail(ErrorCode::dimension_mismatch,
           "select_rows: index " + std::to_string(rows[i]) + " out of range for " +
               a.shape_str());
    }
    const double* src = a.row_ptr(rows[i]);
    double* dst = out.row_ptr(i);
    for (std::size_t j = 0; j < a.cols; ++j) dst[j] = src[j];
  }
  return out;
}

Matrix select_cols(const Matrix& a, const std::vector<std::uint32_t>& cols) {
  Matrix out(a.rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= a.cols) {
      fail(ErrorCode::dimension_mismatch,
           "select_cols: index " + std::to_string(cols[j]) + " out of range for " +
               a.shape_str());
    }
  }
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* src = a.row_ptr(i);
    double* dst = out.row_ptr(i);
    for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
  }
  return out;
}

double frobenius_norm_sq(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return s;
}

}  // namespace fedxfer
