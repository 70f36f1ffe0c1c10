#pragma once

// Small dense matrices generic over the scalar type (std::complex<double> or
// UComplex), sized for the 2x2 / 4x4 / NxN objects of the calibration.
// Pivoting decisions are made on value magnitudes only, so the same code path
// is differentiable by the uncertainty engine.

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "utrl/numkit/uncertain.hpp"

namespace utrl::numkit {

template <class C>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : r_(rows), c_(cols), d_(static_cast<size_t>(rows) * cols) {}
  Mat(int rows, int cols, std::initializer_list<C> init) : Mat(rows, cols) {
    if (static_cast<int>(init.size()) != rows * cols)
      throw EngineError("initializer size mismatch");
    int i = 0;
    for (const C& x : init) d_[static_cast<size_t>(i++)] = x;
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = C(1);
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }

  C& operator()(int i, int j) { return d_[static_cast<size_t>(i) * c_ + j]; }
  const C& operator()(int i, int j) const { return d_[static_cast<size_t>(i) * c_ + j]; }

  Mat operator+(const Mat& o) const {
    check_same(o);
    Mat m(r_, c_);
    for (size_t i = 0; i < d_.size(); ++i) m.d_[i] = d_[i] + o.d_[i];
    return m;
  }
  Mat operator-(const Mat& o) const {
    check_same(o);
    Mat m(r_, c_);
    for (size_t i = 0; i < d_.size(); ++i) m.d_[i] = d_[i] - o.d_[i];
    return m;
  }
  Mat operator*(const Mat& o) const {
    if (c_ != o.r_) throw EngineError("matmul dimension mismatch");
    Mat m(r_, o.c_);
    for (int i = 0; i < r_; ++i)
      for (int k = 0; k < c_; ++k) {
        const C& a = (*this)(i, k);
        for (int j = 0; j < o.c_; ++j) m(i, j) = m(i, j) + a * o(k, j);
      }
    return m;
  }
  Mat operator*(const C& s) const {
    Mat m(r_, c_);
    for (size_t i = 0; i < d_.size(); ++i) m.d_[i] = d_[i] * s;
    return m;
  }

  Mat transpose() const {
    Mat m(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }
  Mat conjugate() const {
    using std::conj;
    Mat m(r_, c_);
    for (size_t i = 0; i < d_.size(); ++i) m.d_[i] = conj(d_[i]);
    return m;
  }
  Mat adjoint() const { return conjugate().transpose(); }

  // Column-stacking vectorization, returned as an rc x 1 matrix.
  Mat vec() const {
    Mat m(r_ * c_, 1);
    int k = 0;
    for (int j = 0; j < c_; ++j)
      for (int i = 0; i < r_; ++i) m(k++, 0) = (*this)(i, j);
    return m;
  }

  Mat col(int j) const {
    Mat m(r_, 1);
    for (int i = 0; i < r_; ++i) m(i, 0) = (*this)(i, j);
    return m;
  }

  void set_col(int j, const Mat& v) {
    for (int i = 0; i < r_; ++i) (*this)(i, j) = v(i, 0);
  }

  double value_norm() const {  // Frobenius norm of the value part
    double s = 0;
    for (const C& x : d_) {
      const Complex z = val(x);
      s += std::norm(z);
    }
    return std::sqrt(s);
  }

 private:
  void check_same(const Mat& o) const {
    if (r_ != o.r_ || c_ != o.c_) throw EngineError("matrix dimension mismatch");
  }

  int r_ = 0, c_ = 0;
  std::vector<C> d_;
};

template <class C>
Mat<C> kron(const Mat<C>& a, const Mat<C>& b) {
  Mat<C> m(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int p = 0; p < b.rows(); ++p)
        for (int q = 0; q < b.cols(); ++q)
          m(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return m;
}

// LU with partial (value-magnitude) pivoting; shared by det and inverse.
namespace detail {

template <class C>
struct Lu {
  Mat<C> lu;
  std::vector<int> perm;
  int sign = 1;
  bool singular = false;
};

template <class C>
Lu<C> lu_decompose(Mat<C> a) {
  const int n = a.rows();
  if (n != a.cols()) throw EngineError("LU requires a square matrix");
  Lu<C> out{Mat<C>(0, 0), {}, 1, false};
  out.perm.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.perm[static_cast<size_t>(i)] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(val(a(k, k)));
    for (int i = k + 1; i < n; ++i) {
      const double m = std::abs(val(a(i, k)));
      if (m > best) { best = m; piv = i; }
    }
    if (best < 1e-300) { out.singular = true; break; }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(out.perm[static_cast<size_t>(k)], out.perm[static_cast<size_t>(piv)]);
      out.sign = -out.sign;
    }
    for (int i = k + 1; i < n; ++i) {
      a(i, k) = a(i, k) / a(k, k);
      for (int j = k + 1; j < n; ++j) a(i, j) = a(i, j) - a(i, k) * a(k, j);
    }
  }
  out.lu = std::move(a);
  return out;
}

}  // namespace detail

template <class C>
C det(const Mat<C>& a) {
  auto lu = detail::lu_decompose(a);
  if (lu.singular) return C(0);
  C d = C(static_cast<double>(lu.sign));
  for (int i = 0; i < a.rows(); ++i) d = d * lu.lu(i, i);
  return d;
}

template <class C>
Mat<C> inverse(const Mat<C>& a) {
  const int n = a.rows();
  auto lu = detail::lu_decompose(a);
  if (lu.singular) throw EngineError("singular matrix in inverse");
  Mat<C> inv(n, n);
  for (int col = 0; col < n; ++col) {
    // solve A x = e_col via the permuted LU factors
    std::vector<C> x(static_cast<size_t>(n), C(0));
    for (int i = 0; i < n; ++i)
      x[static_cast<size_t>(i)] = C(lu.perm[static_cast<size_t>(i)] == col ? 1.0 : 0.0);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j)
        x[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] - lu.lu(i, j) * x[static_cast<size_t>(j)];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j)
        x[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] - lu.lu(i, j) * x[static_cast<size_t>(j)];
      x[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] / lu.lu(i, i);
    }
    for (int i = 0; i < n; ++i) inv(i, col) = x[static_cast<size_t>(i)];
  }
  return inv;
}

// Trace of a square matrix.
template <class C>
C trace(const Mat<C>& a) {
  C t = C(0);
  for (int i = 0; i < a.rows(); ++i) t = t + a(i, i);
  return t;
}

// Value-part copy of any Mat as a plain complex matrix.
template <class C>
Mat<Complex> value_of(const Mat<C>& a) {
  Mat<Complex> m(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = val(a(i, j));
  return m;
}

}  // namespace utrl::numkit
