#pragma once

// Per-standard covariance blocks and their JSON file format:
// {
//   "standard_id": "...",
//   "frequencies_hz": [...],
//   "ordering": "vecRI",
//   "sigma": [[64 row-major entries] per frequency]          (noise)
//   "sigma_forward": [...optional...],
//   "sigma_inverse": [...optional...]
// }
// All blocks are 8x8 in the canonical vecRI ordering.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "utrl/numkit/covariance.hpp"
#include "utrl/network/twoport.hpp"

namespace utrl::network {

struct CovarianceSet {
  std::string standard_id;
  std::vector<double> frequencies_hz;
  std::vector<Eigen::MatrixXd> sigma_noise;    // Sigma_N
  std::vector<Eigen::MatrixXd> sigma_forward;  // Sigma_F (may be empty)
  std::vector<Eigen::MatrixXd> sigma_inverse;  // Sigma_I (may be empty)
  int sample_count = 0;

  // Sigma_M = Sigma_N + Sigma_F + Sigma_I; missing terms count as zero.
  Eigen::MatrixXd total(size_t f) const {
    Eigen::MatrixXd m = block_or_zero(sigma_noise, f) + block_or_zero(sigma_forward, f) +
                        block_or_zero(sigma_inverse, f);
    if (!numkit::is_psd(m, 1e-9))
      throw NetworkError("total covariance for '" + standard_id +
                         "' is not PSD at frequency index " + std::to_string(f));
    return m;
  }

  static Eigen::MatrixXd block_or_zero(const std::vector<Eigen::MatrixXd>& v, size_t f) {
    if (v.empty()) return Eigen::MatrixXd::Zero(8, 8);
    return v.at(f);
  }
};

namespace detail {

inline std::vector<std::vector<double>> to_rows(const std::vector<Eigen::MatrixXd>& blocks) {
  std::vector<std::vector<double>> out;
  for (const auto& b : blocks) {
    std::vector<double> flat;
    flat.reserve(64);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) flat.push_back(b(i, j));
    out.push_back(std::move(flat));
  }
  return out;
}

inline std::vector<Eigen::MatrixXd> from_rows(const nlohmann::json& j) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& row : j) {
    if (row.size() != 64) throw NetworkError("covariance block must have 64 entries");
    Eigen::MatrixXd b(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int jj = 0; jj < 8; ++jj) b(i, jj) = row[static_cast<size_t>(8 * i + jj)].get<double>();
    out.push_back(0.5 * (b + b.transpose()));
  }
  return out;
}

}  // namespace detail

inline void write_covariance_set(const CovarianceSet& cs, const std::string& path) {
  nlohmann::json j;
  j["standard_id"] = cs.standard_id;
  j["frequencies_hz"] = cs.frequencies_hz;
  j["ordering"] = "vecRI";
  j["sample_count"] = cs.sample_count;
  j["sigma"] = detail::to_rows(cs.sigma_noise);
  if (!cs.sigma_forward.empty()) j["sigma_forward"] = detail::to_rows(cs.sigma_forward);
  if (!cs.sigma_inverse.empty()) j["sigma_inverse"] = detail::to_rows(cs.sigma_inverse);
  std::ofstream out(path);
  if (!out) throw NetworkError("cannot write covariance file: " + path);
  out << j.dump(1) << '\n';
}

inline CovarianceSet read_covariance_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open covariance file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("ordering", "vecRI") != std::string("vecRI"))
    throw NetworkError("unsupported covariance ordering in " + path);
  CovarianceSet cs;
  cs.standard_id = j.value("standard_id", "");
  cs.frequencies_hz = j.at("frequencies_hz").get<std::vector<double>>();
  cs.sample_count = j.value("sample_count", 0);
  cs.sigma_noise = detail::from_rows(j.at("sigma"));
  if (j.contains("sigma_forward")) cs.sigma_forward = detail::from_rows(j["sigma_forward"]);
  if (j.contains("sigma_inverse")) cs.sigma_inverse = detail::from_rows(j["sigma_inverse"]);
  if (cs.sigma_noise.size() != cs.frequencies_hz.size())
    throw NetworkError("covariance blocks do not match frequency grid in " + path);
  return cs;
}

}  // namespace utrl::network
