#pragma once

#include "arbor/scalar.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace arbor {

/// Row-major square/rectangular matrix over a Scalar. Used where exact
/// rational arithmetic is needed; floating-point hot paths go through Eigen.
template <Scalar S>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, S(0)) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  S& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const S& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  bool operator==(const DenseMatrix&) const = default;

  /// Submatrix with row/column `skip` removed.
  DenseMatrix without(std::size_t skip) const {
    DenseMatrix out(rows_ - 1, cols_ - 1);
    for (std::size_t r = 0, rr = 0; r < rows_; ++r) {
      if (r == skip) continue;
      for (std::size_t c = 0, cc = 0; c < cols_; ++c) {
        if (c == skip) continue;
        out(rr, cc++) = (*this)(r, c);
      }
      ++rr;
    }
    return out;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<S> data_;
};

/// Determinant by Gaussian elimination. Exact for Rational; partial
/// pivoting on magnitude for double.
template <Scalar S>
S determinant(DenseMatrix<S> a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("determinant: matrix is not square");
  const std::size_t n = a.rows();
  S det(1);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    if constexpr (is_rational_v<S>) {
      while (piv < n && a(piv, k) == 0) ++piv;
      if (piv == n) return S(0);
    } else {
      for (std::size_t r = k + 1; r < n; ++r)
        if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
      if (a(piv, k) == 0.0) return 0.0;
    }
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t r = k + 1; r < n; ++r) {
      if (a(r, k) == 0) continue;
      S f = a(r, k) / a(k, k);
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
    }
  }
  return det;
}

/// Inverse by Gauss-Jordan. Throws on a singular matrix.
template <Scalar S>
DenseMatrix<S> inverse(DenseMatrix<S> a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("inverse: matrix is not square");
  const std::size_t n = a.rows();
  DenseMatrix<S> inv(n, n);
  for (std::size_t i = 0; i < n; ++i) inv(i, i) = S(1);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    if constexpr (is_rational_v<S>) {
      while (piv < n && a(piv, k) == 0) ++piv;
    } else {
      for (std::size_t r = k + 1; r < n; ++r)
        if (std::abs(a(r, k)) > std::abs(a(piv, k))) piv = r;
    }
    if (piv == n || a(piv, k) == 0) throw std::domain_error("inverse: matrix is singular");
    if (piv != k)
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a(k, c), a(piv, c));
        std::swap(inv(k, c), inv(piv, c));
      }
    S d = a(k, k);
    for (std::size_t c = 0; c < n; ++c) {
      a(k, c) /= d;
      inv(k, c) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == k || a(r, k) == 0) continue;
      S f = a(r, k);
      for (std::size_t c = 0; c < n; ++c) {
        a(r, c) -= f * a(k, c);
        inv(r, c) -= f * inv(k, c);
      }
    }
  }
  return inv;
}

}  // namespace arbor
