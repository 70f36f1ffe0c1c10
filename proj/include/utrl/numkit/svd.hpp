#pragma once

// One-sided Jacobi SVD, generic over the scalar type so the uncertainty
// engine can differentiate straight through the iteration. All branching
// (rotation ordering, convergence) is decided on value magnitudes.

#include <algorithm>
#include <cmath>
#include <vector>

#include "utrl/numkit/matrix.hpp"
#include "utrl/numkit/uncertain.hpp"

namespace utrl::numkit {

inline double norm2(const Complex& z) { return std::norm(z); }

template <class C>
struct SvdResult {
  using R = typename scalar_traits<C>::real_type;
  Mat<C> U;           // m x n, unitary columns
  std::vector<R> s;   // descending
  Mat<C> V;           // n x n
};

// A = U diag(s) V^H. Columns with (numerically) zero norm are returned
// unnormalized with s = 0; callers only consume the well-separated leading
// part.
template <class C>
SvdResult<C> svd_jacobi(const Mat<C>& A, int max_sweeps = 60) {
  using std::abs;
  using std::conj;
  using std::sqrt;
  using R = typename scalar_traits<C>::real_type;

  const int m = A.rows(), n = A.cols();
  Mat<C> B = A;
  Mat<C> V = Mat<C>::identity(n);

  const double scale = std::max(A.value_norm(), 1e-300);
  const double tol = 1e-15;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off_max = 0.0;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        R app = R(0), aqq = R(0);
        C apq = C(0);
        for (int i = 0; i < m; ++i) {
          app = app + norm2(B(i, p));
          aqq = aqq + norm2(B(i, q));
          apq = apq + conj(B(i, p)) * B(i, q);
        }
        const double apq_mag = std::abs(val(apq));
        const double col_scale = std::sqrt(std::max(val(app) * val(aqq), 1e-300));
        off_max = std::max(off_max, apq_mag / std::max(col_scale, 1e-300 * scale));
        if (apq_mag < 1e-150 * scale * scale) continue;  // phase undefined

        R aabs = abs(apq);
        C ph = apq / C(aabs);
        R tau = (aqq - app) / (R(2) * aabs);
        R one = R(1);
        R t = (val(tau) >= 0.0) ? one / (tau + sqrt(one + tau * tau))
                                : R(-1) / (sqrt(one + tau * tau) - tau);
        R cth = one / sqrt(one + t * t);
        R sth = t * cth;
        C cc = C(cth), sc = C(sth), phc = conj(ph);
        for (int i = 0; i < m; ++i) {
          C bp = B(i, p), bq = phc * B(i, q);
          B(i, p) = cc * bp - sc * bq;
          B(i, q) = sc * bp + cc * bq;
        }
        for (int i = 0; i < n; ++i) {
          C vp = V(i, p), vq = phc * V(i, q);
          V(i, p) = cc * vp - sc * vq;
          V(i, q) = sc * vp + cc * vq;
        }
      }
    }
    if (off_max < tol && sweep >= 2) break;
  }

  // Column norms, sorted descending by value.
  std::vector<R> sig;
  sig.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    R s2 = R(0);
    for (int i = 0; i < m; ++i) s2 = s2 + norm2(B(i, j));
    if (val(s2) > 0.0)
      sig.push_back(sqrt(s2));
    else
      sig.push_back(R(0));
  }
  std::vector<int> order(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) order[static_cast<size_t>(j)] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return val(sig[static_cast<size_t>(a)]) > val(sig[static_cast<size_t>(b)]); });

  SvdResult<C> out;
  out.U = Mat<C>(m, n);
  out.V = Mat<C>(n, n);
  out.s.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int src = order[static_cast<size_t>(j)];
    out.s.push_back(sig[static_cast<size_t>(src)]);
    const double sv = val(sig[static_cast<size_t>(src)]);
    for (int i = 0; i < m; ++i) {
      C u = B(i, src);
      if (sv > 1e-300 * scale) u = u / C(sig[static_cast<size_t>(src)]);
      out.U(i, j) = u;
    }
    for (int i = 0; i < n; ++i) out.V(i, j) = V(i, src);
  }
  return out;
}

}  // namespace utrl::numkit
