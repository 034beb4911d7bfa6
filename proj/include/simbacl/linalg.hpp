#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "simbacl/error.hpp"

namespace simbacl {

/// Dense row-major matrix; everything here targets the d <= 16 parameter
/// matrices of the sandwich estimator, not general linear algebra.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  Matrix transposed() const {
    Matrix m(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(j, i) = (*this)(i, j);
    return m;
  }

  friend Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw ConfigError("Matrix: shape mismatch in product");
    Matrix m(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t k = 0; k < x.cols; ++k) {
        double xv = x(i, k);
        for (std::size_t j = 0; j < y.cols; ++j) m(i, j) += xv * y(k, j);
      }
    return m;
  }

  friend Matrix operator+(const Matrix& x, const Matrix& y) {
    Matrix m = x;
    for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] += y.a[i];
    return m;
  }

  Matrix& operator*=(double s) {
    for (double& v : a) v *= s;
    return *this;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < rows; ++i) t += (*this)(i, i);
    return t;
  }

  double max_asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = i + 1; j < cols; ++j)
        m = std::max(m, std::fabs((*this)(i, j) - (*this)(j, i)));
    return m;
  }

  void symmetrize() {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = i + 1; j < cols; ++j) {
        double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
        (*this)(i, j) = v;
        (*this)(j, i) = v;
      }
  }
};

struct EigenSym {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition for a symmetric matrix.
inline EigenSym eigen_sym(Matrix m) {
  const std::size_t n = m.rows;
  Matrix q = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-300) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r) {
        if (std::fabs(m(p, r)) < 1e-300) continue;
        double theta = (m(r, r) - m(p, p)) / (2.0 * m(p, r));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double mkp = m(k, p), mkr = m(k, r);
          m(k, p) = c * mkp - s * mkr;
          m(k, r) = s * mkp + c * mkr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double mpk = m(p, k), mrk = m(r, k);
          m(p, k) = c * mpk - s * mrk;
          m(r, k) = s * mpk + c * mrk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
  }
  EigenSym e;
  e.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.values[i] = m(i, i);
  e.vectors = Matrix(n, n);
  // sort ascending
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (e.values[order[j]] < e.values[order[i]]) std::swap(order[i], order[j]);
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) {
    sorted[i] = e.values[order[i]];
    for (std::size_t k = 0; k < n; ++k) e.vectors(k, i) = q(k, order[i]);
  }
  e.values = sorted;
  return e;
}

/// Inverse of a symmetric matrix through its eigendecomposition.
inline Matrix inverse_sym(const Matrix& m) {
  EigenSym e = eigen_sym(m);
  const std::size_t n = m.rows;
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (e.values[k] == 0.0) throw NumericError("inverse_sym: singular matrix");
        s += e.vectors(i, k) * e.vectors(j, k) / e.values[k];
      }
      inv(i, j) = s;
    }
  return inv;
}

inline double quadratic_form(const Matrix& m, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) s += x[i] * m(i, j) * x[j];
  return s;
}

inline double min_eigenvalue(const Matrix& m) { return eigen_sym(m).values.front(); }

}  // namespace simbacl
