#pragma once

// Rank-2 Takagi factorization of a complex symmetric matrix:
// T ~ G G^T with G = U_t sqrt(S_t), keeping the two dominant singular values
// (Eckart-Young truncation). Computed as SVD plus a per-vector phase
// alignment; for a (near) twofold degenerate leading pair the factor is
// recovered from the projected 2x2 problem instead.

#include <cmath>
#include <stdexcept>

#include "utrl/numkit/svd.hpp"

namespace utrl::numkit {

class TakagiError : public std::runtime_error {
 public:
  explicit TakagiError(const std::string& m) : std::runtime_error(m) {}
};

template <class C>
struct TakagiFactors {
  using R = typename scalar_traits<C>::real_type;
  Mat<C> G;   // N x 2
  R s1, s2;   // s1 >= s2 > 0
  double s3;  // discarded tail magnitude (model-violation indicator)
};

namespace detail {

template <class C>
typename scalar_traits<C>::real_type real_part(const C& z);
template <>
inline double real_part<Complex>(const Complex& z) { return z.real(); }
template <>
inline UReal real_part<UComplex>(const UComplex& z) { return real(z); }

template <class C>
typename scalar_traits<C>::real_type arg_of(const C& z);
template <>
inline double arg_of<Complex>(const Complex& z) { return std::arg(z); }
template <>
inline UReal arg_of<UComplex>(const UComplex& z) { return arg(z); }

// e^{j*theta/2} from an uncertain/plain angle.
template <class C>
C half_phase(const typename scalar_traits<C>::real_type& theta) {
  using std::cos;
  using std::sin;
  using R = typename scalar_traits<C>::real_type;
  R half = theta / R(2);
  return scalar_traits<C>::make(cos(half), sin(half));
}

// Takagi of a 2x2 complex symmetric K via the Hermitian eigenproblem of
// K conj(K); handles the fully degenerate (unitary-like) case separately.
template <class C>
void takagi_2x2(const Mat<C>& K, Mat<C>& vecs,
                typename scalar_traits<C>::real_type& s1_out,
                typename scalar_traits<C>::real_type& s2_out) {
  using std::abs;
  using std::conj;
  using std::sqrt;
  using R = typename scalar_traits<C>::real_type;

  Mat<C> H = K * K.conjugate();  // Hermitian PSD, eigenvectors are the Takagi basis
  R h11 = real_part<C>(H(0, 0)), h22 = real_part<C>(H(1, 1));
  C h12 = H(0, 1);
  R disc = (h11 - h22) * (h11 - h22) + R(4) * norm2(h12);
  R d = (val(disc) > 0.0) ? sqrt(disc) : R(0);
  const double tr = val(h11) + val(h22);

  Mat<C> w1(2, 1);
  if (val(d) > 1e-10 * std::max(tr, 1e-300)) {
    R lam1 = (h11 + h22 + d) / R(2);
    // pick the better-conditioned eigenvector formula
    Mat<C> cand_a(2, 1, {h12, C(lam1 - h11)});
    Mat<C> cand_b(2, 1, {C(lam1 - h22), conj(h12)});
    w1 = (cand_a.value_norm() >= cand_b.value_norm()) ? cand_a : cand_b;
    R nrm = sqrt(norm2(w1(0, 0)) + norm2(w1(1, 0)));
    w1(0, 0) = w1(0, 0) / C(nrm);
    w1(1, 0) = w1(1, 0) / C(nrm);
  } else {
    // s1 == s2: K is s times a symmetric unitary; build an invariant vector
    // of the antilinear map x -> K conj(x) from a fixed probe.
    R s = sqrt((h11 + h22) / R(2));
    C kx0 = K(0, 0), kx1 = K(1, 0);  // K * conj(e1)
    C inner = kx0;                   // <e1, K conj(e1)>
    R inner_abs = abs(inner);
    C phase = (val(inner_abs) > 1e-14 * val(s)) ? inner / C(inner_abs) : C(1);
    w1(0, 0) = C(1) + conj(phase) * kx0 / C(s);
    w1(1, 0) = conj(phase) * kx1 / C(s);
    R nrm = sqrt(norm2(w1(0, 0)) + norm2(w1(1, 0)));
    w1(0, 0) = w1(0, 0) / C(nrm);
    w1(1, 0) = w1(1, 0) / C(nrm);
  }
  Mat<C> w2(2, 1, {C(0) - conj(w1(1, 0)), conj(w1(0, 0))});

  vecs = Mat<C>(2, 2);
  R svals[2];
  Mat<C>* ws[2] = {&w1, &w2};
  for (int i = 0; i < 2; ++i) {
    const Mat<C>& w = *ws[i];
    // c = w^H K conj(w); |c| = s_i, and e^{j arg(c)/2} w is the Takagi vector
    Mat<C> kwbar = K * w.conjugate();
    C c = conj(w(0, 0)) * kwbar(0, 0) + conj(w(1, 0)) * kwbar(1, 0);
    R ci = abs(c);
    C hp = (val(ci) > 0.0) ? half_phase<C>(arg_of<C>(c)) : C(1);
    vecs(0, i) = hp * w(0, 0);
    vecs(1, i) = hp * w(1, 0);
    svals[i] = ci;
  }
  if (val(svals[0]) >= val(svals[1])) {
    s1_out = svals[0];
    s2_out = svals[1];
  } else {
    s1_out = svals[1];
    s2_out = svals[0];
    Mat<C> swapped(2, 2);
    for (int i = 0; i < 2; ++i) {
      swapped(i, 0) = vecs(i, 1);
      swapped(i, 1) = vecs(i, 0);
    }
    vecs = swapped;
  }
}

}  // namespace detail

// Relative singular-value gap below which the projected 2x2 route is used.
inline constexpr double kTakagiDegenerateGap = 1e-8;

template <class C>
TakagiFactors<C> takagi_rank2(const Mat<C>& T_in) {
  using std::abs;
  using std::conj;
  using std::sqrt;
  using R = typename scalar_traits<C>::real_type;

  const int n = T_in.rows();
  if (n < 2 || T_in.cols() != n) throw TakagiError("takagi_rank2 requires a square matrix, N >= 2");
  const double tnorm = T_in.value_norm();
  if ((value_of(T_in) - value_of(T_in.transpose())).value_norm() > 1e-8 * std::max(tnorm, 1e-300))
    throw TakagiError("matrix is not complex symmetric");
  Mat<C> T = (T_in + T_in.transpose()) * C(0.5);

  SvdResult<C> svd = svd_jacobi(T);
  const double s1v = val(svd.s[0]);
  const double s2v = val(svd.s[1]);
  if (s2v <= 1e-12 * std::max(s1v, 1e-300))
    throw TakagiError("degenerate line set: rank < 2");
  const double s3v = (n > 2) ? val(svd.s[2]) : 0.0;

  TakagiFactors<C> out;
  out.s3 = s3v;
  out.G = Mat<C>(n, 2);

  if ((s1v - s2v) > kTakagiDegenerateGap * s1v) {
    // well separated: per-vector phase recipe, conj(v_i) = e^{-j theta_i} u_i
    R svals[2] = {svd.s[0], svd.s[1]};
    for (int i = 0; i < 2; ++i) {
      C c = C(0);
      for (int k = 0; k < n; ++k) c = c + conj(svd.U(k, i)) * conj(svd.V(k, i));
      C hp = detail::half_phase<C>(detail::arg_of<C>(c));
      R rs = sqrt(svals[i]);
      for (int k = 0; k < n; ++k) out.G(k, i) = C(rs) * hp * svd.U(k, i);
    }
    out.s1 = svals[0];
    out.s2 = svals[1];
  } else {
    // near-degenerate pair: project into the leading singular subspace and
    // solve the 2x2 complex-symmetric Takagi in closed form
    Mat<C> U2(n, 2);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < 2; ++i) U2(k, i) = svd.U(k, i);
    Mat<C> K = U2.adjoint() * T * U2.conjugate();
    Mat<C> vecs;
    detail::takagi_2x2(K, vecs, out.s1, out.s2);
    Mat<C> tv = U2 * vecs;  // back to N-space
    R rs1 = sqrt(out.s1), rs2 = sqrt(out.s2);
    for (int k = 0; k < n; ++k) {
      out.G(k, 0) = C(rs1) * tv(k, 0);
      out.G(k, 1) = C(rs2) * tv(k, 1);
    }
  }
  return out;
}

}  // namespace utrl::numkit
