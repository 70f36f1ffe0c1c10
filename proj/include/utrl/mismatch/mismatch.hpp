#pragma once

// Line-mismatch uncertainty: the mismatched-line T-model and the propagation
// of the joint (reflection, propagation-constant) covariance of a line's
// cross section into a measurement-domain covariance block. The mismatch
// cannot be forward-propagated through the calibration, so it is converted
// into an equivalent measurement covariance instead.

#include <Eigen/Dense>
#include <cmath>

#include "utrl/mtrl/calibration.hpp"
#include "utrl/numkit/covariance.hpp"

namespace utrl::mismatch {

using numkit::Complex;
using numkit::Mat;
using numkit::UComplex;
using numkit::UReal;
using numkit::val;

class MismatchError : public std::runtime_error {
 public:
  explicit MismatchError(const std::string& m) : std::runtime_error(m) {}
};

// L' = 1/(1-G^2) [[1,G],[G,1]] diag(e^{-g l}, e^{g l}) [[1,-G],[-G,1]];
// a transmission line whose impedance is mismatched against the reference.
template <class C>
Mat<C> mismatched_line_t(const C& refl, const C& gamma,
                         const typename numkit::scalar_traits<C>::real_type& length) {
  using std::exp;
  if (std::abs(val(refl)) >= 1.0 - 1e-9)
    throw MismatchError("mismatch reflection coefficient too close to unity");
  C one(1);
  C g2 = refl * refl;
  C inv = one / (one - g2);
  C ep = exp(gamma * C(length));
  C em = one / ep;
  Mat<C> t(2, 2);
  t(0, 0) = (em - g2 * ep) * inv;
  t(0, 1) = (ep - em) * refl * inv;
  t(1, 0) = (em - ep) * refl * inv;
  t(1, 1) = (ep - g2 * em) * inv;
  return t;
}

// G = dZ / (2 mu_Z + dZ); zero-mean impedance perturbation against the
// nominal line impedance.
template <class C>
C gamma_reflection_from_impedance(const C& delta_z, const C& mu_z) {
  C den = C(2) * mu_z + delta_z;
  if (std::abs(val(den)) < 1e-300)
    throw MismatchError("degenerate impedance: 2 mu_Z + delta_Z ~ 0");
  return delta_z / den;
}

// Mean measurement of the i-th line through the error boxes,
// vec(M') = k X vec(L'), as a T-matrix.
inline Mat<Complex> mismatched_measurement_mean(const mtrl::CalibrationSolution<Complex>& sol,
                                                double length) {
  Mat<Complex> l = mismatched_line_t(Complex(0), sol.gamma, length);
  Mat<Complex> x = sol.coeffs.xtilde;
  Complex scale[4] = {sol.a11 * sol.b11, sol.b11, sol.a11, Complex(1)};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) x(i, j) = x(i, j) * scale[j];
  Mat<Complex> v = x * l.vec() * sol.k;
  Mat<Complex> m(2, 2);
  m(0, 0) = v(0, 0);
  m(1, 0) = v(1, 0);
  m(0, 1) = v(2, 0);
  m(1, 1) = v(3, 0);
  return m;
}

// 8x8 covariance of vec(M') in the vecRI ordering for one line standard,
// from the 4x4 joint covariance of (Re G, Im G, Re gamma, Im gamma). The
// Jacobian is produced by running the model on uncertain values around the
// calibrated mean (mu_G = 0, mu_gamma from the calibration).
inline Eigen::MatrixXd sigma_I_for_line(const mtrl::CalibrationSolution<Complex>& sol,
                                        double length, const Eigen::MatrixXd& sigma_gg) {
  if (!sol.valid) throw MismatchError("calibration solution invalid at this frequency");
  if (sigma_gg.rows() != 4 || sigma_gg.cols() != 4)
    throw MismatchError("mismatch covariance must be 4x4");

  numkit::InputRegistry reg;
  Eigen::VectorXd mean(4);
  mean << 0.0, 0.0, sol.gamma.real(), sol.gamma.imag();
  int src = reg.register_input("line_mismatch", mean, sigma_gg);
  reg.freeze();

  UComplex refl = reg.cvariable(src, 0);
  UComplex gamma = reg.cvariable(src, 1);
  Mat<UComplex> l = mismatched_line_t(refl, gamma, UReal(length));

  Mat<UComplex> x(4, 4);
  Complex scale[4] = {sol.a11 * sol.b11, sol.b11, sol.a11, Complex(1)};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) x(i, j) = UComplex(sol.coeffs.xtilde(i, j) * scale[j]);
  Mat<UComplex> v = x * l.vec() * UComplex(sol.k);

  std::vector<UComplex> outs = {v(0, 0), v(1, 0), v(2, 0), v(3, 0)};
  Eigen::MatrixXd j = numkit::jacobian_rows(outs, reg.dim());
  return numkit::propagate_covariance(j, reg.covariance());
}

// Convert a T-domain (vec M') covariance block into the S-domain around the
// given mean T-matrix, through the Jacobian of the T -> S conversion.
inline Eigen::MatrixXd sigma_t_to_s(const Mat<Complex>& t_mean, const Eigen::MatrixXd& sigma_t) {
  if (sigma_t.rows() != 8 || sigma_t.cols() != 8)
    throw MismatchError("T-domain covariance must be 8x8");
  numkit::InputRegistry reg;
  Eigen::VectorXd mean(8);
  int k = 0;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      mean(2 * k) = t_mean(i, j).real();
      mean(2 * k + 1) = t_mean(i, j).imag();
      ++k;
    }
  int src = reg.register_input("t_block", mean, sigma_t);
  reg.freeze();
  Mat<UComplex> t(2, 2);
  k = 0;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) t(i, j) = reg.cvariable(src, k++);
  Mat<UComplex> s = network::t_to_s(t);
  std::vector<UComplex> outs = {s(0, 0), s(1, 0), s(0, 1), s(1, 1)};
  Eigen::MatrixXd j = numkit::jacobian_rows(outs, reg.dim());
  return numkit::propagate_covariance(j, reg.covariance());
}

}  // namespace utrl::mismatch
