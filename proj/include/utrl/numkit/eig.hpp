#pragma once

// Eigen-extraction specialized to 4x4 matrices with spectrum {-l, 0, 0, +l}.
// lambda comes from trace(F^2)/2 and the eigenvectors from the spectral
// projectors F(F +- lambda I); both are smooth in F, so the uncertainty
// engine differentiates them directly.

#include <stdexcept>

#include "utrl/numkit/matrix.hpp"

namespace utrl::numkit {

class EigError : public std::runtime_error {
 public:
  explicit EigError(const std::string& m) : std::runtime_error(m) {}
};

template <class C>
struct PmEigen {
  C lambda;
  Mat<C> x1;  // eigenvector of -lambda (unnormalized)
  Mat<C> x4;  // eigenvector of +lambda (unnormalized)
};

namespace detail {

template <class C>
Mat<C> dominant_column(const Mat<C>& P) {
  int best = 0;
  double best_norm = -1.0;
  for (int j = 0; j < P.cols(); ++j) {
    const double n = P.col(j).value_norm();
    if (n > best_norm) { best_norm = n; best = j; }
  }
  if (best_norm <= 0.0) throw EigError("zero spectral projector");
  return P.col(best);
}

}  // namespace detail

template <class C>
PmEigen<C> eig_pm_lambda(const Mat<C>& F, double trace_tol = 1e-2) {
  using std::sqrt;
  if (F.rows() != 4 || F.cols() != 4) throw EigError("eig_pm_lambda expects a 4x4 matrix");
  const double fnorm = F.value_norm();
  if (std::abs(val(trace(F))) > trace_tol * std::max(fnorm, 1e-300))
    throw EigError("matrix trace is not (near) zero; spectrum is not {-l,0,0,l}");

  Mat<C> F2 = F * F;
  C lambda = sqrt(trace(F2) / C(2));
  if (std::abs(val(lambda)) < 1e-12 * std::max(fnorm, 1e-300))
    throw EigError("lambda ~ 0: all line pairs singular at this frequency");

  Mat<C> I = Mat<C>::identity(4);
  PmEigen<C> out;
  out.lambda = lambda;
  out.x4 = detail::dominant_column(F * (F + I * lambda));
  out.x1 = detail::dominant_column(F * (F - I * lambda));
  return out;
}

}  // namespace utrl::numkit
