#pragma once

// Dense row-major matrix of doubles plus the few free-standing numeric
// routines the rest of the library leans on (naive matmul, LU solve).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tif {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
    if (r < 1 || c < 1) throw std::invalid_argument("Matrix: rows and cols must be >= 1");
  }

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return data.size(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  double scalar() const {
    if (!is_scalar()) throw std::invalid_argument("Matrix::scalar: not 1x1");
    return data[0];
  }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
  static Matrix ones(int r, int c) { return Matrix(r, c, 1.0); }
  static Matrix from_rows(const std::vector<std::vector<double>>& rs) {
    Matrix m(static_cast<int>(rs.size()), static_cast<int>(rs.at(0).size()));
    for (int i = 0; i < m.rows; ++i) {
      if (static_cast<int>(rs[i].size()) != m.cols)
        throw std::invalid_argument("Matrix::from_rows: ragged rows");
      for (int j = 0; j < m.cols; ++j) m.at(i, j) = rs[i][j];
    }
    return m;
  }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
  Matrix out(a.rows, b.cols);
  // ikj order keeps the inner loop contiguous.
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + static_cast<size_t>(i) * a.cols;
    double* orow = out.data.data() + static_cast<size_t>(i) * out.cols;
    for (int k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

// Solves a x = b by LU decomposition with partial pivoting; throws on a
// numerically singular pivot.
inline Matrix lu_solve(Matrix a, Matrix b) {
  if (a.rows != a.cols) throw std::invalid_argument("lu_solve: matrix not square");
  if (a.rows != b.rows) throw std::invalid_argument("lu_solve: rhs row mismatch");
  int n = a.rows;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::fabs(a.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      double v = std::fabs(a.at(r, col));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-12) throw std::domain_error("lu_solve: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a.at(col, j), a.at(piv, j));
      for (int j = 0; j < b.cols; ++j) std::swap(b.at(col, j), b.at(piv, j));
    }
    for (int r = col + 1; r < n; ++r) {
      double f = a.at(r, col) / a.at(col, col);
      a.at(r, col) = f;
      for (int j = col + 1; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
      for (int j = 0; j < b.cols; ++j) b.at(r, j) -= f * b.at(col, j);
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    for (int j = 0; j < b.cols; ++j) {
      double s = b.at(col, j);
      for (int k = col + 1; k < n; ++k) s -= a.at(col, k) * b.at(k, j);
      b.at(col, j) = s / a.at(col, col);
    }
  }
  return b;
}

}  // namespace tif
