#pragma once

// Unbiased sample covariance of repeated sweeps in the vecRI ordering,
// plus the mean record.

#include <vector>

#include "utrl/network/twoport.hpp"

namespace utrl::network {

struct SweepStatistics {
  TwoPortRecord mean;
  std::vector<Eigen::MatrixXd> sigma;  // 8x8 per frequency
  int sample_count = 0;
};

inline SweepStatistics sample_covariance(const std::vector<TwoPortRecord>& sweeps) {
  if (sweeps.size() < 2) throw NetworkError("sample_covariance needs at least 2 sweeps");
  const size_t nf = sweeps.front().size();
  for (const auto& rec : sweeps) {
    rec.validate();
    if (rec.size() != nf) throw NetworkError("sample_covariance: frequency grid mismatch");
    for (size_t i = 0; i < nf; ++i)
      if (rec.frequencies_hz[i] != sweeps.front().frequencies_hz[i])
        throw NetworkError("sample_covariance: frequency grid mismatch");
  }

  const int n = static_cast<int>(sweeps.size());
  SweepStatistics out;
  out.sample_count = n;
  out.mean.frequencies_hz = sweeps.front().frequencies_hz;
  out.mean.reference_ohm = sweeps.front().reference_ohm;
  out.sigma.resize(nf);

  for (size_t f = 0; f < nf; ++f) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(8);
    for (const auto& rec : sweeps) mu += vec_ri(rec.s[f]);
    mu /= n;
    Eigen::MatrixXd sig = Eigen::MatrixXd::Zero(8, 8);
    for (const auto& rec : sweeps) {
      Eigen::VectorXd d = vec_ri(rec.s[f]) - mu;
      sig += d * d.transpose();
    }
    sig /= (n - 1);
    out.mean.s.push_back(from_vec_ri(mu));
    out.sigma[f] = 0.5 * (sig + sig.transpose());
  }
  return out;
}

}  // namespace utrl::network
