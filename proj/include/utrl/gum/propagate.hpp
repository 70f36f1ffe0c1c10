#pragma once

// Forward uncertainty propagation through the calibration. One registry per
// frequency point carries every input source (measurement noise, converted
// line-mismatch blocks, line lengths, reflect asymmetry offsets); the
// calibration runs once on uncertain values and each output's gradient row
// then yields totals and per-source / per-standard budget shares.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "utrl/mtrl/calibration.hpp"
#include "utrl/numkit/covariance.hpp"

namespace utrl::gum {

using numkit::Complex;
using numkit::Mat;
using numkit::UComplex;
using numkit::UReal;

class GumError : public std::runtime_error {
 public:
  explicit GumError(const std::string& m) : std::runtime_error(m) {}
};

enum class SourceKind { noise, length, reflect_asymmetry, line_mismatch, other_forward };

inline const char* kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::noise: return "noise";
    case SourceKind::length: return "length";
    case SourceKind::reflect_asymmetry: return "reflect-asymmetry";
    case SourceKind::line_mismatch: return "line-mismatch";
    case SourceKind::other_forward: return "other-forward";
  }
  return "?";
}

struct SourceTag {
  SourceKind kind;
  std::string target;  // standard id ("std0", "reflect", "dut") or "global"
  int registry_id;
};

// Total measurement covariance: the sum of the noise, forward-model and
// inverse-model blocks, each optional (empty means zero).
inline Eigen::MatrixXd assemble_total_covariance(const Eigen::MatrixXd& sigma_n,
                                                 const Eigen::MatrixXd& sigma_f,
                                                 const Eigen::MatrixXd& sigma_i,
                                                 const std::string& label = "") {
  auto pick = [](const Eigen::MatrixXd& m) {
    return m.size() ? m : Eigen::MatrixXd(Eigen::MatrixXd::Zero(8, 8));
  };
  Eigen::MatrixXd n = pick(sigma_n), f = pick(sigma_f), i = pick(sigma_i);
  if (n.rows() != 8 || f.rows() != 8 || i.rows() != 8 || n.cols() != 8 || f.cols() != 8 ||
      i.cols() != 8)
    throw GumError("covariance blocks must be 8x8 (" + label + ")");
  Eigen::MatrixXd total = n + f + i;
  total = 0.5 * (total + total.transpose());
  if (!numkit::is_psd(total, 1e-9))
    throw GumError("total measurement covariance is not PSD for block '" + label + "'");
  return total;
}

// Per-frequency uncertainty description. Empty matrices mean zero.
struct FrequencyUncertaintyModel {
  std::vector<Eigen::MatrixXd> sigma_noise;     // 8x8 per standard, S-domain
  std::vector<Eigen::MatrixXd> sigma_mismatch;  // 8x8 per standard, S-domain
  Eigen::MatrixXd sigma_reflect;                // 8x8
  Eigen::MatrixXd sigma_dut;                    // 8x8
  double u_length = 40e-6;                      // per-line length std, meters
  double u_delta = 40e-6;                       // per-port reflect asymmetry std
};

struct PropagatedCalibration {
  double frequency_hz = 0.0;
  mtrl::CalibrationSolution<UComplex> sol;
  Mat<UComplex> dut_cal;  // 2x2 calibrated DUT (if a DUT was given)
  bool has_dut = false;
  numkit::InputRegistry reg;
  std::vector<SourceTag> sources;
};

namespace detail {

inline Eigen::VectorXd vec_ri_of(const Mat<Complex>& m) {
  Eigen::VectorXd v(8);
  int k = 0;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      v(2 * k) = m(i, j).real();
      v(2 * k + 1) = m(i, j).imag();
      ++k;
    }
  return v;
}

inline Eigen::MatrixXd block_or_zero(const std::vector<Eigen::MatrixXd>& v, size_t i) {
  if (i < v.size() && v[i].size()) return v[i];
  return Eigen::MatrixXd::Zero(8, 8);
}

}  // namespace detail

inline PropagatedCalibration propagate_frequency(
    double f_hz, const mtrl::FrequencyData<Complex>& mean_data, const Mat<Complex>* dut_s,
    const mtrl::LineSet& lines, const FrequencyUncertaintyModel& um, Complex gamma_est,
    int w_sign_fallback = 0) {
  lines.validate();
  const int n = lines.size();
  if (static_cast<int>(mean_data.line_s.size()) != n)
    throw GumError("mean data does not match line set");

  PropagatedCalibration out;
  out.frequency_hz = f_hz;

  // register all sources first (the registry is append-only, then frozen)
  std::vector<int> noise_src(static_cast<size_t>(n)), mm_src(static_cast<size_t>(n), -1);
  std::vector<int> len_src(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::string id = "std" + std::to_string(i);
    noise_src[static_cast<size_t>(i)] = out.reg.register_input(
        "noise:" + id, detail::vec_ri_of(mean_data.line_s[static_cast<size_t>(i)]),
        detail::block_or_zero(um.sigma_noise, static_cast<size_t>(i)));
    out.sources.push_back({SourceKind::noise, id, noise_src[static_cast<size_t>(i)]});

    Eigen::MatrixXd smm = detail::block_or_zero(um.sigma_mismatch, static_cast<size_t>(i));
    mm_src[static_cast<size_t>(i)] =
        out.reg.register_input("mismatch:" + id, Eigen::VectorXd::Zero(8), smm);
    out.sources.push_back({SourceKind::line_mismatch, id, mm_src[static_cast<size_t>(i)]});

    Eigen::VectorXd lm(1);
    lm(0) = lines.lengths_m[static_cast<size_t>(i)];
    Eigen::MatrixXd lc(1, 1);
    lc(0, 0) = um.u_length * um.u_length;
    len_src[static_cast<size_t>(i)] = out.reg.register_input("length:" + id, lm, lc);
    out.sources.push_back({SourceKind::length, id, len_src[static_cast<size_t>(i)]});
  }

  Eigen::MatrixXd sr = um.sigma_reflect.size() ? um.sigma_reflect : Eigen::MatrixXd::Zero(8, 8);
  int refl_src = out.reg.register_input("noise:reflect", detail::vec_ri_of(mean_data.reflect_s), sr);
  out.sources.push_back({SourceKind::noise, "reflect", refl_src});

  Eigen::MatrixXd dc(1, 1);
  dc(0, 0) = um.u_delta * um.u_delta;
  Eigen::VectorXd d1(1), d2(1);
  d1(0) = mean_data.delta1;
  d2(0) = mean_data.delta2;
  int del1_src = out.reg.register_input("asym:port1", d1, dc);
  int del2_src = out.reg.register_input("asym:port2", d2, dc);
  out.sources.push_back({SourceKind::reflect_asymmetry, "reflect", del1_src});
  out.sources.push_back({SourceKind::reflect_asymmetry, "reflect", del2_src});

  int dut_src = -1;
  if (dut_s) {
    Eigen::MatrixXd sd = um.sigma_dut.size() ? um.sigma_dut : Eigen::MatrixXd::Zero(8, 8);
    dut_src = out.reg.register_input("noise:dut", detail::vec_ri_of(*dut_s), sd);
    out.sources.push_back({SourceKind::noise, "dut", dut_src});
  }

  // reflect estimate enters only the sign decision; zero covariance, zero
  // sensitivity, registered so the bookkeeping is complete
  Eigen::VectorXd re(2);
  re << lines.reflect_estimate.real(), lines.reflect_estimate.imag();
  int est_src = out.reg.register_input("reflect-estimate", re, Eigen::MatrixXd::Zero(2, 2));
  out.sources.push_back({SourceKind::other_forward, "reflect", est_src});

  out.reg.freeze();

  auto umat = [&](int src, int extra) {
    Mat<UComplex> m(2, 2);
    int k = 0;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        UComplex v = out.reg.cvariable(src, k);
        if (extra >= 0) v = v + out.reg.cvariable(extra, k);
        m(i, j) = v;
        ++k;
      }
    return m;
  };

  mtrl::FrequencyData<UComplex> fdu;
  std::vector<UReal> lens;
  for (int i = 0; i < n; ++i) lens.push_back(out.reg.variable(len_src[static_cast<size_t>(i)], 0));
  for (int i = 0; i < n; ++i) {
    fdu.line_s.push_back(umat(noise_src[static_cast<size_t>(i)], mm_src[static_cast<size_t>(i)]));
    fdu.dl.push_back(lens[static_cast<size_t>(i)] - lens[static_cast<size_t>(lines.thru_index)]);
  }
  fdu.reflect_s = umat(refl_src, -1);
  fdu.delta1 = out.reg.variable(del1_src, 0);
  fdu.delta2 = out.reg.variable(del2_src, 0);

  out.sol = mtrl::solve_frequency(fdu, lines, gamma_est, w_sign_fallback);
  if (dut_src >= 0) {
    out.dut_cal = mtrl::apply_calibration(out.sol, umat(dut_src, -1));
    out.has_dut = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

inline double variance_of(const UReal& x, const Eigen::MatrixXd& sigma) {
  if (!x.g.size()) return 0.0;
  return (x.g * sigma * x.g.transpose())(0, 0);
}

// Variance share of one source: restrict the gradient to its slot.
inline double source_variance(const UReal& x, const numkit::InputRegistry& reg, int source_id) {
  if (!x.g.size()) return 0.0;
  const auto& s = reg.source(source_id);
  const Eigen::Index d = s.mean.size();
  Eigen::RowVectorXd g = x.g.segment(s.offset, d);
  return (g * s.cov * g.transpose())(0, 0);
}

struct BudgetEntry {
  std::string group;
  double variance = 0.0;
};

struct QuantityBudget {
  std::string name;
  double value = 0.0;
  double std_total = 0.0;
  double ci95_lo = 0.0, ci95_hi = 0.0;  // value -+ 1.96 std
  std::vector<BudgetEntry> shares;
};

struct BudgetReport {
  double frequency_hz = 0.0;
  std::string grouping;  // "by-source" or "by-standard"
  std::vector<QuantityBudget> quantities;
};

// Output quantities tracked in budgets: relative effective permittivity and
// loss per length from gamma, and calibrated DUT reflection/transmission
// magnitudes when a DUT is present.
inline std::vector<std::pair<std::string, UReal>> budget_quantities(
    const PropagatedCalibration& pc) {
  std::vector<std::pair<std::string, UReal>> q;
  UReal beta = imag(pc.sol.gamma);
  UReal scale(mtrl::kSpeedOfLight / (2.0 * M_PI * pc.frequency_hz));
  UReal root = scale * beta;
  q.emplace_back("eps_r_eff", root * root);
  q.emplace_back("loss_db_per_m", UReal(20.0 / std::log(10.0)) * real(pc.sol.gamma));
  if (pc.has_dut) {
    q.emplace_back("mag_s11", abs(pc.dut_cal(0, 0)));
    q.emplace_back("mag_s21", abs(pc.dut_cal(1, 0)));
  }
  return q;
}

inline BudgetReport budget(const PropagatedCalibration& pc, const std::string& grouping) {
  if (grouping != "by-source" && grouping != "by-standard")
    throw GumError("unknown budget grouping '" + grouping + "'");
  BudgetReport rep;
  rep.frequency_hz = pc.frequency_hz;
  rep.grouping = grouping;
  Eigen::MatrixXd sigma = pc.reg.covariance();

  for (const auto& [name, x] : budget_quantities(pc)) {
    QuantityBudget qb;
    qb.name = name;
    qb.value = x.v;
    const double var = variance_of(x, sigma);
    qb.std_total = std::sqrt(std::max(var, 0.0));
    qb.ci95_lo = qb.value - 1.96 * qb.std_total;
    qb.ci95_hi = qb.value + 1.96 * qb.std_total;

    for (const SourceTag& tag : pc.sources) {
      const std::string group =
          (grouping == "by-source") ? kind_name(tag.kind) : tag.target;
      double v = source_variance(x, pc.reg, tag.registry_id);
      bool found = false;
      for (auto& e : qb.shares)
        if (e.group == group) {
          e.variance += v;
          found = true;
        }
      if (!found) qb.shares.push_back({group, v});
    }
    rep.quantities.push_back(std::move(qb));
  }
  return rep;
}

}  // namespace utrl::gum
