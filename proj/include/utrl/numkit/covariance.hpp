#pragma once

// First-order covariance propagation and PSD utilities.

#include <Eigen/Dense>
#include <stdexcept>

#include "utrl/numkit/uncertain.hpp"

namespace utrl::numkit {

// Sigma_h = J Sigma_r J^T, symmetrized.
inline Eigen::MatrixXd propagate_covariance(const Eigen::MatrixXd& J,
                                            const Eigen::MatrixXd& sigma_r) {
  if (J.cols() != sigma_r.rows() || sigma_r.rows() != sigma_r.cols())
    throw EngineError("propagate_covariance: dimension mismatch");
  Eigen::MatrixXd s = J * sigma_r * J.transpose();
  return 0.5 * (s + s.transpose());
}

// Eigenvalue floor check: lambda_min >= -tol * trace-scale.
inline bool is_psd(const Eigen::MatrixXd& s, double rel_tol = 1e-12) {
  if (s.rows() != s.cols()) return false;
  if (s.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double scale = std::max(1e-300, std::abs(s.trace()));
  return es.eigenvalues().minCoeff() >= -rel_tol * scale;
}

// Jacobian rows of a set of uncertain reals against the full registry.
inline Eigen::MatrixXd jacobian_rows(const std::vector<UReal>& outs, int dim) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outs.size()), dim);
  for (size_t i = 0; i < outs.size(); ++i)
    if (outs[i].g.size()) J.row(static_cast<Eigen::Index>(i)) = outs[i].g;
  return J;
}

// Real-split Jacobian rows [Re; Im] per complex output, interleaved.
inline Eigen::MatrixXd jacobian_rows(const std::vector<UComplex>& outs, int dim) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * static_cast<Eigen::Index>(outs.size()), dim);
  for (size_t i = 0; i < outs.size(); ++i) {
    if (!outs[i].g.size()) continue;
    J.row(2 * static_cast<Eigen::Index>(i)) = outs[i].g.real();
    J.row(2 * static_cast<Eigen::Index>(i) + 1) = outs[i].g.imag();
  }
  return J;
}

}  // namespace utrl::numkit
