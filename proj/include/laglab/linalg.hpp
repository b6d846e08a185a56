#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "laglab/dual.hpp"
#include "laglab/errors.hpp"

// Small dense linear algebra over a generic scalar.  Everything here runs on
// matrices no larger than 8x8 (ambient dimension 2n, n <= 4) or 6x6 (matrix
// inequality families), so plain loops beat any library and — crucially —
// they work unchanged over nested dual numbers.

namespace laglab {

template <class T>
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  T& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const {
    return a[static_cast<size_t>(i) * cols + j];
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1.0);
    return m;
  }
};

template <class T>
struct Tensor3 {
  int n0 = 0, n1 = 0, n2 = 0;
  std::vector<T> a;

  Tensor3() = default;
  Tensor3(int d0, int d1, int d2)
      : n0(d0), n1(d1), n2(d2), a(static_cast<size_t>(d0) * d1 * d2) {}

  T& operator()(int i, int j, int k) {
    return a[(static_cast<size_t>(i) * n1 + j) * n2 + k];
  }
  const T& operator()(int i, int j, int k) const {
    return a[(static_cast<size_t>(i) * n1 + j) * n2 + k];
  }
};

template <class T>
struct Tensor4 {
  int n0 = 0, n1 = 0, n2 = 0, n3 = 0;
  std::vector<T> a;

  Tensor4() = default;
  Tensor4(int d0, int d1, int d2, int d3)
      : n0(d0), n1(d1), n2(d2), n3(d3),
        a(static_cast<size_t>(d0) * d1 * d2 * d3) {}

  T& operator()(int i, int j, int k, int l) {
    return a[((static_cast<size_t>(i) * n1 + j) * n2 + k) * n3 + l];
  }
  const T& operator()(int i, int j, int k, int l) const {
    return a[((static_cast<size_t>(i) * n1 + j) * n2 + k) * n3 + l];
  }
};

template <class T>
Matrix<T> mat_mul(const Matrix<T>& x, const Matrix<T>& y) {
  Matrix<T> r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const T& xik = x(i, k);
      for (int j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
    }
  return r;
}

template <class T>
std::vector<T> mat_vec(const Matrix<T>& m, const std::vector<T>& v) {
  std::vector<T> r(m.rows);
  for (int i = 0; i < m.rows; ++i) {
    T s{};
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

template <class T>
Matrix<T> transpose(const Matrix<T>& m) {
  Matrix<T> r(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
  return r;
}

// Gauss-Jordan with partial pivoting on |value|.  Works over dual scalars.
template <class T>
Matrix<T> inverse(Matrix<T> m) {
  if (m.rows != m.cols) throw InvalidInputError("inverse: non-square matrix");
  const int n = m.rows;
  Matrix<T> inv = Matrix<T>::identity(n);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (magnitude(m(r, col)) > magnitude(m(piv, col))) piv = r;
    if (magnitude(m(piv, col)) < 1e-300)
      throw NumericalError("inverse: singular matrix");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(m(piv, j), m(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    T d = m(col, col);
    for (int j = 0; j < n; ++j) {
      m(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      T f = m(r, col);
      if (magnitude(f) == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        m(r, j) -= f * m(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

template <class T>
T determinant(Matrix<T> m) {
  if (m.rows != m.cols)
    throw InvalidInputError("determinant: non-square matrix");
  const int n = m.rows;
  T det(1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (magnitude(m(r, col)) > magnitude(m(piv, col))) piv = r;
    if (magnitude(m(piv, col)) == 0.0) return T(0.0);
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(col, j));
      det = -det;
    }
    det *= m(col, col);
    for (int r = col + 1; r < n; ++r) {
      T f = m(r, col) / m(col, col);
      for (int j = col; j < n; ++j) m(r, j) -= f * m(col, j);
    }
  }
  return det;
}

// Cyclic Jacobi eigensolver for symmetric matrices; eigenvalues ascending.
inline std::vector<double> sym_eigenvalues(Matrix<double> m) {
  const int n = m.rows;
  if (n != m.cols) throw InvalidInputError("sym_eigenvalues: non-square");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-28) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(m(p, q)) < 1e-300) continue;
        double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double frobenius_norm(const Matrix<double>& m) {
  double s = 0.0;
  for (double x : m.a) s += x * x;
  return std::sqrt(s);
}

}  // namespace laglab
