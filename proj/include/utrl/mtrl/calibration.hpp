#pragma once

// Calibration core. Per frequency point the steps are:
//   1. stack measured T-parameters into the 4xN system matrix M
//   2. derive the NxN weighting matrix W from the measurements themselves
//      (rank-2 Takagi route), resolving its sign against a model W
//   3. form F = M W D^-1 M^T P Q and extract the +-lambda eigenvectors
//   4. normalize the eigenvectors into the coefficient matrix X~ and read
//      off the ratio coefficients
//   5. extract the propagation constant from X~^-1 M (least squares)
//   6. denormalize with the thru and reflect measurements, solving for
//      a11, b11 and the seventh error term k
//
// Everything is templated over the scalar type so the same code path runs
// on plain complex values and on uncertain values carrying gradients.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "utrl/mtrl/lineset.hpp"
#include "utrl/network/twoport.hpp"
#include "utrl/numkit/eig.hpp"
#include "utrl/numkit/matrix.hpp"
#include "utrl/numkit/takagi.hpp"

namespace utrl::mtrl {

using numkit::Mat;
using numkit::scalar_traits;
using numkit::val;

inline constexpr double kSpeedOfLight = 299792458.0;

// Constant permutation-like matrices of the vectorized error-box equation.
inline const Mat<Complex>& p_matrix() {
  static const Mat<Complex> p(4, 4,
                              {Complex(1), Complex(0), Complex(0), Complex(0),
                               Complex(0), Complex(0), Complex(1), Complex(0),
                               Complex(0), Complex(1), Complex(0), Complex(0),
                               Complex(0), Complex(0), Complex(0), Complex(1)});
  return p;
}

inline const Mat<Complex>& q_matrix() {
  static const Mat<Complex> q(4, 4,
                              {Complex(0), Complex(0), Complex(0), Complex(1),
                               Complex(0), Complex(-1), Complex(0), Complex(0),
                               Complex(0), Complex(0), Complex(-1), Complex(0),
                               Complex(1), Complex(0), Complex(0), Complex(0)});
  return q;
}

// P*Q, symmetric.
inline const Mat<Complex>& pq_matrix() {
  static const Mat<Complex> pq = p_matrix() * q_matrix();
  return pq;
}

template <class C>
Mat<C> pq_as() {
  const Mat<Complex>& pq = pq_matrix();
  Mat<C> out(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = scalar_traits<C>::from(pq(i, j));
  return out;
}

// ---------------------------------------------------------------------------
// System assembly
// ---------------------------------------------------------------------------

template <class C>
struct CalibrationSystem {
  Mat<C> M;             // 4 x N, columns vec(M_i)
  std::vector<C> det_m; // det(M_i)
  int thru = 0;
};

template <class C>
CalibrationSystem<C> build_system(const std::vector<Mat<C>>& t_meas, const LineSet& lines) {
  lines.validate();
  const int n = lines.size();
  if (static_cast<int>(t_meas.size()) != n)
    throw CalibrationError("number of measured standards does not match line set");

  CalibrationSystem<C> sys;
  sys.thru = lines.thru_index;
  sys.M = Mat<C>(4, n);
  sys.det_m.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Mat<C>& t = t_meas[static_cast<size_t>(i)];
    if (t.rows() != 2 || t.cols() != 2) throw CalibrationError("standard T-matrix must be 2x2");
    C d = numkit::det(t);
    if (std::abs(val(d)) < 1e-300)
      throw CalibrationError("singular measurement for standard " + std::to_string(i));
    sys.M.set_col(i, t.vec());
    sys.det_m.push_back(d);
  }
  return sys;
}

// Model T-parameter columns [e^{-g dl}, 0, 0, e^{+g dl}] for each standard.
inline Mat<Complex> model_l_matrix(const LineSet& lines, Complex gamma) {
  const int n = lines.size();
  Mat<Complex> l(4, n);
  for (int i = 0; i < n; ++i) {
    l(0, i) = std::exp(-gamma * lines.dl(i));
    l(3, i) = std::exp(gamma * lines.dl(i));
  }
  return l;
}

// Closed-form eigenvalue of the weighted system: the sum of
// |e^{g(l_i-l_j)} - e^{-g(l_i-l_j)}|^2 over all standard pairs i<j.
inline double model_lambda(const LineSet& lines, Complex gamma) {
  double acc = 0.0;
  for (int i = 0; i < lines.size(); ++i)
    for (int j = i + 1; j < lines.size(); ++j) {
      const double d = lines.dl(i) - lines.dl(j);
      acc += std::norm(std::exp(gamma * d) - std::exp(-gamma * d));
    }
  return acc;
}

// ---------------------------------------------------------------------------
// Weighting matrix
// ---------------------------------------------------------------------------

// W from the propagation constant: W^H = z y^T - y z^T with
// y_i = e^{+g dl_i}, z_i = e^{-g dl_i}. Invariant under a common length
// shift, so thru-referenced lengths are used.
template <class C>
Mat<C> model_weighting(const LineSet& lines, const C& gamma) {
  using std::conj;
  using std::exp;
  const int n = lines.size();
  std::vector<C> y, z;
  y.reserve(static_cast<size_t>(n));
  z.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    C e = exp(gamma * scalar_traits<C>::from(Complex(lines.dl(i))));
    y.push_back(e);
    z.push_back(C(1) / e);
  }
  Mat<C> w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // W = (W^H)^H, (W^H)_{ji} = z_j y_i - y_j z_i
      C wh_ji = z[static_cast<size_t>(j)] * y[static_cast<size_t>(i)] -
                y[static_cast<size_t>(j)] * z[static_cast<size_t>(i)];
      w(i, j) = conj(wh_ji);
    }
  return w;
}

struct WeightingChoice {
  int sign = 0;          // +1 or -1 relative to the raw Takagi factor
  bool conclusive = false;
};

// W from the measurements alone: the NxN matrix D^-1 M^T P Q M equals the
// error-box-free model z y^T + y z^T, whose rank-2 Takagi factor G shares
// the vector basis of W^H. The remaining sign is resolved against the model
// W evaluated at the gamma estimate; if the two distances are within 1% of
// each other the fallback sign (frequency continuity) is used instead.
template <class C>
Mat<C> weighting_from_measurements(const CalibrationSystem<C>& sys, const LineSet& lines,
                                   Complex gamma_est, int fallback_sign = 0,
                                   WeightingChoice* choice = nullptr) {
  using std::conj;
  const int n = sys.M.cols();
  Mat<C> t = sys.M.transpose() * pq_as<C>() * sys.M;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = t(i, j) / sys.det_m[static_cast<size_t>(i)];
  t = (t + t.transpose()) * C(0.5);

  numkit::TakagiFactors<C> tk = numkit::takagi_rank2(t);

  // W^H_+ = G [[0, j], [-j, 0]] G^T
  Mat<C> wh(n, n);
  const C jj = scalar_traits<C>::from(Complex(0, 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      wh(i, j) = jj * (tk.G(i, 0) * tk.G(j, 1) - tk.G(i, 1) * tk.G(j, 0));
  Mat<C> w_plus = wh.adjoint();

  Mat<Complex> wm = numkit::value_of(model_weighting(lines, scalar_traits<C>::from(gamma_est)));
  Mat<Complex> wp = numkit::value_of(w_plus);
  const double d_plus = (wp - wm).value_norm();
  const double d_minus = (wp + wm).value_norm();

  int sign;
  bool conclusive = std::abs(d_plus - d_minus) >= 0.01 * std::max(d_plus, d_minus);
  if (conclusive) {
    sign = (d_plus <= d_minus) ? 1 : -1;
  } else {
    if (fallback_sign == 0)
      throw CalibrationError("weighting sign inconclusive and no fallback sign available");
    sign = fallback_sign;
  }
  if (choice) {
    choice->sign = sign;
    choice->conclusive = conclusive;
  }
  return (sign > 0) ? w_plus : Mat<C>(w_plus * C(-1));
}

// ---------------------------------------------------------------------------
// Eigenproblem
// ---------------------------------------------------------------------------

template <class C>
struct EigenPair {
  C lambda;
  Mat<C> x1;  // eigenvector of -lambda
  Mat<C> x4;  // eigenvector of +lambda
  Mat<C> F;
};

template <class C>
EigenPair<C> solve_eigensystem(const CalibrationSystem<C>& sys, const Mat<C>& w) {
  const int n = sys.M.cols();
  Mat<C> dm_t = sys.M.transpose();  // then scale rows by 1/det
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 4; ++j) dm_t(i, j) = dm_t(i, j) / sys.det_m[static_cast<size_t>(i)];
  Mat<C> f = sys.M * w * dm_t * pq_as<C>();
  numkit::PmEigen<C> e = numkit::eig_pm_lambda(f);
  return {e.lambda, e.x1, e.x4, f};
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

template <class C>
struct NormalizedCoefficients {
  Mat<C> xtilde;  // 4x4, columns x~1 .. x~4
  C a12, b21;
  C ra;  // a21/a11
  C rb;  // b12/b11
};

// x~1 = x1/x1[0], x~4 = x4/x4[3]; the inner columns follow from the
// Kronecker block structure of X = B^T (x) A and use only the normalized
// ratios.
template <class C>
NormalizedCoefficients<C> normalize(const Mat<C>& x1, const Mat<C>& x4) {
  const double n1 = x1.value_norm(), n4 = x4.value_norm();
  if (std::abs(val(x1(0, 0))) < 1e-12 * n1)
    throw CalibrationError("normalization pivot x1[0] vanishes");
  if (std::abs(val(x4(3, 0))) < 1e-12 * n4)
    throw CalibrationError("normalization pivot x4[3] vanishes");

  NormalizedCoefficients<C> nc;
  C inv1 = C(1) / x1(0, 0);
  C inv4 = C(1) / x4(3, 0);
  C t1[4], t4[4];
  for (int i = 0; i < 4; ++i) {
    t1[i] = x1(i, 0) * inv1;
    t4[i] = x4(i, 0) * inv4;
  }
  nc.ra = t1[1];
  nc.rb = t1[2];
  nc.b21 = t4[1];
  nc.a12 = t4[2];

  nc.xtilde = Mat<C>(4, 4);
  for (int i = 0; i < 4; ++i) {
    nc.xtilde(i, 0) = t1[i];
    nc.xtilde(i, 3) = t4[i];
  }
  // x~2 = [a12, 1, rb*a12, rb], x~3 = [b21, b21*ra, 1, ra]
  nc.xtilde(0, 1) = nc.a12;
  nc.xtilde(1, 1) = C(1);
  nc.xtilde(2, 1) = nc.rb * nc.a12;
  nc.xtilde(3, 1) = nc.rb;
  nc.xtilde(0, 2) = nc.b21;
  nc.xtilde(1, 2) = nc.b21 * nc.ra;
  nc.xtilde(2, 2) = C(1);
  nc.xtilde(3, 2) = nc.ra;
  return nc;
}

// ---------------------------------------------------------------------------
// Propagation-constant extraction
// ---------------------------------------------------------------------------

// From X~^-1 M the first and last rows are proportional to e^{-g dl_i} and
// e^{+g dl_i}; ratios to the thru column cancel the unknown scale factors.
// Phases are unwrapped against gamma_est and combined in least squares.
// dl entries may carry uncertainty (they multiply into the fit).
template <class C>
C extract_gamma(const NormalizedCoefficients<C>& nc, const CalibrationSystem<C>& sys,
                const std::vector<typename scalar_traits<C>::real_type>& dl,
                Complex gamma_est, bool* unwrap_marginal = nullptr) {
  using std::log;
  using R = typename scalar_traits<C>::real_type;
  const int n = sys.M.cols();
  if (static_cast<int>(dl.size()) != n)
    throw CalibrationError("referenced-length vector does not match system size");

  Mat<C> r = numkit::inverse(nc.xtilde) * sys.M;
  const int t = sys.thru;
  if (std::abs(val(r(0, t))) < 1e-300 || std::abs(val(r(3, t))) < 1e-300)
    throw CalibrationError("thru column pivot vanishes in gamma extraction");
  C inv0 = C(1) / r(0, t);
  C inv3 = C(1) / r(3, t);

  if (unwrap_marginal) *unwrap_marginal = false;
  C num = C(0);
  R den = R(0);
  for (int i = 0; i < n; ++i) {
    if (i == t) continue;
    const double dlv = val(dl[static_cast<size_t>(i)]);
    if (dlv == 0.0) continue;
    C ep = r(3, i) * inv3;  // ~ e^{+g dl_i}
    C em = r(0, i) * inv0;  // ~ e^{-g dl_i}
    C phi = (log(ep) - log(em)) * C(0.5);
    // principal-branch half-difference is the true g*dl modulo j*pi
    const double target = gamma_est.imag() * dlv;
    const double frac = (target - val(phi).imag()) / M_PI;
    const double nearest = std::round(frac);
    if (unwrap_marginal && std::abs(frac - nearest) > 0.45) *unwrap_marginal = true;
    phi = phi + scalar_traits<C>::from(Complex(0, M_PI * nearest));
    num = num + C(dl[static_cast<size_t>(i)]) * phi;
    den = den + dl[static_cast<size_t>(i)] * dl[static_cast<size_t>(i)];
  }
  if (val(den) == 0.0) throw CalibrationError("no usable line pair for gamma extraction");
  return num / C(den);
}

// ---------------------------------------------------------------------------
// Denormalization
// ---------------------------------------------------------------------------

template <class C>
struct Denormalized {
  C a11, b11, k;
  C gamma_reflect;  // solved reflection coefficient of the reflect standard
};

// Thru: vec(M_thru) = (k a11 b11) x~1 + k x~4, a 4x2 least-squares problem.
// Reflect: the raw port reflections give a11*G1 and b11*G2 through bilinear
// inversions; with per-port offsets G_p = G e^{-2 g d_p} the product fixes
// G^2, the sign is resolved against the estimate, then a11 and b11 split.
template <class C>
Denormalized<C> denormalize(const NormalizedCoefficients<C>& nc, const Mat<C>& m_thru,
                            const C& refl_m1, const C& refl_m2, Complex reflect_estimate,
                            const C& gamma,
                            const typename scalar_traits<C>::real_type& delta1,
                            const typename scalar_traits<C>::real_type& delta2) {
  using std::exp;
  using std::sqrt;

  Mat<C> a_ls(4, 2);
  for (int i = 0; i < 4; ++i) {
    a_ls(i, 0) = nc.xtilde(i, 0);
    a_ls(i, 1) = nc.xtilde(i, 3);
  }
  Mat<C> gram = a_ls.adjoint() * a_ls;
  Mat<C> rhs = a_ls.adjoint() * m_thru;
  Mat<C> c = numkit::inverse(gram) * rhs;
  C k = c(1, 0);
  if (std::abs(val(k)) < 1e-300) throw CalibrationError("vanishing error term k");
  C ab = c(0, 0) / k;  // a11*b11

  C ag = (refl_m1 - nc.a12) / (C(1) - refl_m1 * nc.ra);  // a11 * G1
  C bg = (refl_m2 + nc.b21) / (C(1) + refl_m2 * nc.rb);  // b11 * G2
  C esum = exp(gamma * C(delta1 + delta2) * C(2));
  C root = sqrt(ag * bg / ab * esum);

  const Complex rv = val(root);
  const double d_plus = std::abs(rv - reflect_estimate);
  const double d_minus = std::abs(-rv - reflect_estimate);
  if (std::abs(d_plus - d_minus) < 1e-6)
    throw CalibrationError("reflect estimate too ambiguous to resolve the sign");
  C g = (d_plus <= d_minus) ? root : C(root * C(-1));

  Denormalized<C> out;
  out.gamma_reflect = g;
  C g1 = g * exp(gamma * C(delta1) * C(-2));
  out.a11 = ag / g1;
  out.b11 = ab / out.a11;
  out.k = k;
  return out;
}

// ---------------------------------------------------------------------------
// Full per-frequency solution
// ---------------------------------------------------------------------------

template <class C>
struct CalibrationSolution {
  NormalizedCoefficients<C> coeffs;
  C a11, b11, k;
  C gamma;
  C lambda;
  C gamma_reflect;
  int w_sign = 0;
  bool w_sign_conclusive = true;
  bool unwrap_marginal = false;
  bool valid = true;
  std::string flag;
};

// Corrected DUT: vec(T_dut) = (1/k) X^-1 vec(M_dut) with
// X^-1 = diag(1/(a11 b11), 1/b11, 1/a11, 1) X~^-1, then T -> S.
template <class C>
Mat<C> apply_calibration(const CalibrationSolution<C>& sol, const Mat<C>& s_raw) {
  Mat<C> m = network::s_to_t(s_raw).vec();
  Mat<C> y = numkit::inverse(sol.coeffs.xtilde) * m;
  C ab = sol.a11 * sol.b11;
  C inv_k = C(1) / sol.k;
  y(0, 0) = y(0, 0) / ab * inv_k;
  y(1, 0) = y(1, 0) / sol.b11 * inv_k;
  y(2, 0) = y(2, 0) / sol.a11 * inv_k;
  y(3, 0) = y(3, 0) * inv_k;
  Mat<C> t(2, 2);
  t(0, 0) = y(0, 0);
  t(1, 0) = y(1, 0);
  t(0, 1) = y(2, 0);
  t(1, 1) = y(3, 0);
  return network::t_to_s(t);
}

// Symmetric plane shift by `offset` (half per port): only a11, b11 and k
// change; the normalized ratios are invariant.
template <class C>
CalibrationSolution<C> shift_reference_plane(const CalibrationSolution<C>& sol, double offset) {
  using std::exp;
  CalibrationSolution<C> out = sol;
  C e = exp(sol.gamma * C(offset));
  out.a11 = sol.a11 / e;  // e^{-2 g offset/2}
  out.b11 = sol.b11 / e;
  out.k = sol.k * e;
  return out;
}

// ---------------------------------------------------------------------------
// Per-frequency driver
// ---------------------------------------------------------------------------

template <class C>
struct FrequencyData {
  std::vector<Mat<C>> line_s;  // raw 2x2 S of each standard, LineSet order
  Mat<C> reflect_s;            // raw 2x2 S of the reflect standard
  // Referenced lengths; if empty, taken from the LineSet. May carry
  // uncertainty in the propagated pass.
  std::vector<typename scalar_traits<C>::real_type> dl;
  typename scalar_traits<C>::real_type delta1{};  // reflect offset, port 1
  typename scalar_traits<C>::real_type delta2{};  // reflect offset, port 2
};

namespace detail {

// Decide, on plain values, whether the two eigenvectors must be swapped so
// the extracted propagation constant lands near the estimate. The primary
// score compares the principal-branch line ratios e^{2 g dl_i} against the
// estimate on the unit circle, before any phase unwrapping: the unwrap step
// pulls the phase of the wrong assignment toward the estimate too, so a
// distance taken after it can prefer the wrong branch. The unwrapped
// distance is kept only as a tie-breaker when the primary scores do not
// separate (short electrical lengths).
template <class C>
bool eigvec_swap_needed(const EigenPair<C>& eig, const CalibrationSystem<C>& sys,
                        const std::vector<double>& dl_val, Complex gamma_est) {
  CalibrationSystem<Complex> sysv;
  sysv.M = numkit::value_of(sys.M);
  sysv.thru = sys.thru;
  for (const C& d : sys.det_m) sysv.det_m.push_back(val(d));
  Mat<Complex> x1v = numkit::value_of(eig.x1);
  Mat<Complex> x4v = numkit::value_of(eig.x4);

  double dist[2], gdist[2];
  const Mat<Complex>* cands[2][2] = {{&x1v, &x4v}, {&x4v, &x1v}};
  for (int s = 0; s < 2; ++s) {
    try {
      NormalizedCoefficients<Complex> nc = normalize(*cands[s][0], *cands[s][1]);
      Mat<Complex> r = numkit::inverse(nc.xtilde) * sysv.M;
      const int t = sysv.thru;
      if (std::abs(r(0, t)) < 1e-300 || std::abs(r(3, t)) < 1e-300)
        throw CalibrationError("thru pivot vanishes");
      double acc = 0.0;
      int used = 0;
      for (int i = 0; i < sysv.M.cols(); ++i) {
        const double dl = dl_val[static_cast<size_t>(i)];
        if (i == t || dl == 0.0) continue;
        Complex u = (r(3, i) / r(3, t)) / (r(0, i) / r(0, t));  // ~ e^{2 g dl_i}
        const double mag = std::abs(u);
        if (!(mag > 0.0) || !std::isfinite(mag)) throw CalibrationError("degenerate line ratio");
        const Complex vphase = u / mag;
        const Complex model = std::exp(Complex(0.0, 2.0 * gamma_est.imag() * dl));
        const double lm = std::log(mag) - 2.0 * gamma_est.real() * dl;
        acc += std::norm(vphase - model) + lm * lm;
        ++used;
      }
      dist[s] = used ? acc : std::numeric_limits<double>::infinity();
      gdist[s] = std::abs(extract_gamma(nc, sysv, dl_val, gamma_est) - gamma_est);
    } catch (const std::exception&) {
      dist[s] = gdist[s] = std::numeric_limits<double>::infinity();
    }
  }
  if (!std::isfinite(gdist[0]) && !std::isfinite(gdist[1]))
    throw CalibrationError("both eigenvector assignments fail gamma extraction");
  if (std::isfinite(dist[0]) && std::isfinite(dist[1]) &&
      std::abs(dist[0] - dist[1]) <= 0.2 * std::max(dist[0], dist[1]))
    return gdist[1] < gdist[0];
  return dist[1] < dist[0];
}

}  // namespace detail

template <class C>
CalibrationSolution<C> solve_frequency(const FrequencyData<C>& data, const LineSet& lines,
                                       Complex gamma_est, int fallback_w_sign = 0) {
  using R = typename scalar_traits<C>::real_type;
  lines.validate();
  const int n = lines.size();
  if (static_cast<int>(data.line_s.size()) != n)
    throw CalibrationError("frequency data does not match line set");

  std::vector<R> dl = data.dl;
  if (dl.empty())
    for (int i = 0; i < n; ++i) dl.push_back(R(lines.dl(i)));
  std::vector<double> dl_val;
  for (const R& d : dl) dl_val.push_back(val(d));

  std::vector<Mat<C>> t_meas;
  t_meas.reserve(static_cast<size_t>(n));
  for (const auto& s : data.line_s) t_meas.push_back(network::s_to_t(s));
  CalibrationSystem<C> sys = build_system(t_meas, lines);

  WeightingChoice wc;
  Mat<C> w = weighting_from_measurements(sys, lines, gamma_est, fallback_w_sign, &wc);
  EigenPair<C> eig = solve_eigensystem(sys, w);

  if (detail::eigvec_swap_needed(eig, sys, dl_val, gamma_est)) {
    std::swap(eig.x1, eig.x4);
    eig.lambda = C(eig.lambda * C(-1));
  }

  CalibrationSolution<C> sol;
  sol.coeffs = normalize(eig.x1, eig.x4);
  sol.lambda = eig.lambda;
  sol.w_sign = wc.sign;
  sol.w_sign_conclusive = wc.conclusive;
  sol.gamma = extract_gamma(sol.coeffs, sys, dl, gamma_est, &sol.unwrap_marginal);

  Denormalized<C> dn = denormalize(sol.coeffs, sys.M.col(sys.thru),
                                   data.reflect_s(0, 0), data.reflect_s(1, 1),
                                   lines.reflect_estimate, sol.gamma, data.delta1, data.delta2);
  sol.a11 = dn.a11;
  sol.b11 = dn.b11;
  sol.k = dn.k;
  sol.gamma_reflect = dn.gamma_reflect;
  return sol;
}

// ---------------------------------------------------------------------------
// Sweep driver (plain values)
// ---------------------------------------------------------------------------

// First frequency seeds from an effective-permittivity guess; afterwards the
// estimate chains from the previous solved point (scaled with frequency).
// Failed frequencies are marked invalid and skipped by the chain.
struct SweepResult {
  std::vector<CalibrationSolution<Complex>> solutions;
  std::vector<Complex> gamma_est_used;
};

inline Complex gamma_from_eps_eff(double f_hz, double eps_eff) {
  return Complex(0.0, 2.0 * M_PI * f_hz / kSpeedOfLight * std::sqrt(eps_eff));
}

inline SweepResult calibrate_sweep(const std::vector<double>& freqs_hz,
                                   const std::vector<FrequencyData<Complex>>& data,
                                   const LineSet& lines, double eps_eff_guess) {
  if (freqs_hz.size() != data.size())
    throw CalibrationError("frequency grid does not match data");
  SweepResult out;
  Complex est;
  double est_freq = 0.0;
  int w_sign = 0;
  for (size_t i = 0; i < freqs_hz.size(); ++i) {
    const double f = freqs_hz[i];
    Complex gamma_est = (est_freq > 0.0) ? Complex(est * (f / est_freq))
                                         : gamma_from_eps_eff(f, eps_eff_guess);
    out.gamma_est_used.push_back(gamma_est);
    CalibrationSolution<Complex> sol;
    try {
      sol = solve_frequency(data[i], lines, gamma_est, w_sign);
      est = sol.gamma;
      est_freq = f;
      w_sign = sol.w_sign;
    } catch (const std::exception& e) {
      sol.valid = false;
      sol.flag = e.what();
    }
    out.solutions.push_back(std::move(sol));
  }
  return out;
}

}  // namespace utrl::mtrl
