#pragma once

// Monte-Carlo harness: synthesize standards from the cross-section model,
// embed them in the scenario's fixed error boxes, perturb all declared
// sources per trial, run the full calibration per trial, and compare the
// sample statistics against the linear propagation engine.

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "utrl/gum/propagate.hpp"
#include "utrl/mc/rng.hpp"
#include "utrl/mc/scenario.hpp"
#include "utrl/mismatch/mismatch.hpp"
#include "utrl/mtrl/calibration.hpp"
#include "utrl/network/twoport.hpp"

namespace utrl::mc {

// stream identifiers for per-trial splitting
inline constexpr std::uint64_t kSrcGeometry = 1;      // per line, 6 draws
inline constexpr std::uint64_t kSrcLength = 2;        // per line, 1 draw
inline constexpr std::uint64_t kSrcAsym = 3;          // per port, 1 draw
inline constexpr std::uint64_t kSrcNoiseLine = 4;     // per line and frequency
inline constexpr std::uint64_t kSrcNoiseReflect = 5;  // per frequency
inline constexpr std::uint64_t kSrcNoiseDut = 6;      // per frequency

inline const std::vector<std::string>& quantity_names() {
  static const std::vector<std::string> names = {"eps_r_eff", "loss_db_per_m", "mag_s11",
                                                 "mag_s21"};
  return names;
}

namespace detail {

inline numkit::Mat<Complex> embed_line(const McScenario& sc, const numkit::Mat<Complex>& t_std) {
  numkit::Mat<Complex> t = sc.box_a * t_std * sc.box_b;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t(i, j) = t(i, j) * sc.k_scale;
  return network::t_to_s(t);
}

// one-port reflect measurements through the boxes' S-parameters
inline numkit::Mat<Complex> embed_reflect(const McScenario& sc, Complex g1, Complex g2) {
  numkit::Mat<Complex> sa = network::t_to_s(sc.box_a);
  numkit::Mat<Complex> sb = network::t_to_s(sc.box_b);
  numkit::Mat<Complex> r(2, 2);
  r(0, 0) = sa(0, 0) + sa(0, 1) * sa(1, 0) * g1 / (Complex(1) - sa(1, 1) * g1);
  r(1, 1) = sb(1, 1) + sb(0, 1) * sb(1, 0) * g2 / (Complex(1) - sb(0, 0) * g2);
  return r;
}

inline double eps_from_gamma(Complex gamma, double f_hz) {
  const double root = mtrl::kSpeedOfLight * gamma.imag() / (2.0 * M_PI * f_hz);
  return root * root;
}

}  // namespace detail

struct SyntheticDataset {
  std::vector<double> freqs_hz;
  std::vector<mtrl::FrequencyData<Complex>> data;  // per frequency
  std::vector<numkit::Mat<Complex>> dut_raw;       // per frequency
  std::vector<Complex> gamma_nominal;              // cross-section gamma
  std::vector<Complex> z0_nominal;
};

// Nominal (unperturbed, noiseless) dataset of the scenario.
inline SyntheticDataset synthesize_dataset(const McScenario& sc) {
  sc.validate();
  mtrl::LineSet ls = sc.line_set();
  SyntheticDataset out;
  out.freqs_hz = sc.freqs_hz;
  for (double f : sc.freqs_hz) {
    cpw::CpwResult nom = cpw::cpw_model(sc.geometry, f);
    out.gamma_nominal.push_back(nom.gamma);
    out.z0_nominal.push_back(nom.z0);

    mtrl::FrequencyData<Complex> fd;
    for (int i = 0; i < ls.size(); ++i) {
      numkit::Mat<Complex> lt(2, 2);
      lt(0, 0) = std::exp(-nom.gamma * ls.dl(i));
      lt(1, 1) = std::exp(nom.gamma * ls.dl(i));
      fd.line_s.push_back(detail::embed_line(sc, lt));
    }
    Complex g1 = sc.reflect_gamma * std::exp(-2.0 * nom.gamma * sc.delta1);
    Complex g2 = sc.reflect_gamma * std::exp(-2.0 * nom.gamma * sc.delta2);
    fd.reflect_s = detail::embed_reflect(sc, g1, g2);
    fd.delta1 = sc.delta1;
    fd.delta2 = sc.delta2;
    out.data.push_back(std::move(fd));
    out.dut_raw.push_back(detail::embed_line(sc, network::s_to_t(sc.dut_s)));
  }
  return out;
}

namespace detail {

struct TrialDraws {
  std::vector<cpw::CpwGeometry> line_geom;  // per line
  std::vector<double> dlen;                 // per line length offset
  double eps1 = 0.0, eps2 = 0.0;            // reflect asymmetry offsets
};

inline TrialDraws draw_trial(const McScenario& sc, std::uint64_t trial) {
  TrialDraws d;
  const int n = static_cast<int>(sc.lengths_m.size());
  for (int i = 0; i < n; ++i) {
    GaussianStream gg(stream_key(sc.seed, trial, kSrcGeometry, static_cast<std::uint64_t>(i)));
    cpw::CpwGeometry g = sc.geometry;
    for (int p = 0; p < 6; ++p) g.set_param(p, g.param(p) + g.uncertainty(p) * gg.next());
    d.line_geom.push_back(g);

    GaussianStream gl(stream_key(sc.seed, trial, kSrcLength, static_cast<std::uint64_t>(i)));
    d.dlen.push_back(sc.u_length * gl.next());
  }
  GaussianStream g1(stream_key(sc.seed, trial, kSrcAsym, 1));
  GaussianStream g2(stream_key(sc.seed, trial, kSrcAsym, 2));
  d.eps1 = sc.u_delta * g1.next();
  d.eps2 = sc.u_delta * g2.next();
  return d;
}

inline void add_noise(numkit::Mat<Complex>& m, GaussianStream& g, double sd) {
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) m(i, j) += Complex(sd * g.next(), sd * g.next());
}

// One perturbed frequency point of one trial. Each line's physical length
// and cross section deviate independently; the calibration is handed the
// nominal referenced lengths, so the deviations show up as errors.
inline void build_trial_frequency(const McScenario& sc, const TrialDraws& d, std::uint64_t trial,
                                  int fidx, Complex gamma_nom, Complex z0_nom,
                                  mtrl::FrequencyData<Complex>& fd,
                                  numkit::Mat<Complex>& dut_raw) {
  mtrl::LineSet ls = sc.line_set();
  const double f = sc.freqs_hz[static_cast<size_t>(fidx)];
  fd.line_s.clear();
  for (int i = 0; i < ls.size(); ++i) {
    cpw::CpwResult r = cpw::cpw_model(d.line_geom[static_cast<size_t>(i)], f);
    Complex refl = (r.z0 - z0_nom) / (r.z0 + z0_nom);
    const double len = ls.dl(i) + d.dlen[static_cast<size_t>(i)];
    numkit::Mat<Complex> lt = mismatch::mismatched_line_t(refl, r.gamma, len);
    numkit::Mat<Complex> s = embed_line(sc, lt);
    GaussianStream gn(stream_key(sc.seed, trial, kSrcNoiseLine,
                                 static_cast<std::uint64_t>(i) * 65536u +
                                     static_cast<std::uint64_t>(fidx)));
    add_noise(s, gn, sc.noise_std);
    fd.line_s.push_back(std::move(s));
  }
  Complex g1 = sc.reflect_gamma * std::exp(-2.0 * gamma_nom * (sc.delta1 + d.eps1));
  Complex g2 = sc.reflect_gamma * std::exp(-2.0 * gamma_nom * (sc.delta2 + d.eps2));
  fd.reflect_s = embed_reflect(sc, g1, g2);
  GaussianStream gr(stream_key(sc.seed, trial, kSrcNoiseReflect, static_cast<std::uint64_t>(fidx)));
  add_noise(fd.reflect_s, gr, sc.noise_std);
  fd.delta1 = sc.delta1;
  fd.delta2 = sc.delta2;

  dut_raw = embed_line(sc, network::s_to_t(sc.dut_s));
  GaussianStream gd(stream_key(sc.seed, trial, kSrcNoiseDut, static_cast<std::uint64_t>(fidx)));
  add_noise(dut_raw, gd, sc.noise_std);
}

}  // namespace detail

struct McStats {
  std::vector<double> freqs_hz;
  std::vector<std::string> names;
  // mean[q][f], stddev[q][f]
  std::vector<std::vector<double>> mean, stddev;
  int trials = 0;
  int dropped = 0;
};

// Full Monte-Carlo run: per trial, draw every source, rebuild the dataset,
// calibrate at every frequency and collect the output quantities. Trials
// are independent and may run on several threads; per-trial results land in
// preallocated slots, so the reduction is deterministic for any thread
// count. A trial that fails calibration anywhere is dropped and counted;
// more than 1% drops fails the run.
inline McStats run_mc(const McScenario& sc, int threads = 1) {
  sc.validate();
  mtrl::LineSet ls = sc.line_set();
  const int nf = static_cast<int>(sc.freqs_hz.size());
  const int nq = static_cast<int>(quantity_names().size());
  const int nt = sc.trials;

  // nominal cross section per frequency
  std::vector<Complex> gamma_nom(static_cast<size_t>(nf)), z0_nom(static_cast<size_t>(nf));
  for (int fi = 0; fi < nf; ++fi) {
    cpw::CpwResult r = cpw::cpw_model(sc.geometry, sc.freqs_hz[static_cast<size_t>(fi)]);
    gamma_nom[static_cast<size_t>(fi)] = r.gamma;
    z0_nom[static_cast<size_t>(fi)] = r.z0;
  }

  std::vector<double> values(static_cast<size_t>(nt) * static_cast<size_t>(nf) *
                             static_cast<size_t>(nq));
  std::vector<char> ok(static_cast<size_t>(nt), 0);

  auto run_trial = [&](int trial) {
    detail::TrialDraws d = detail::draw_trial(sc, static_cast<std::uint64_t>(trial));
    mtrl::FrequencyData<Complex> fd;
    numkit::Mat<Complex> dut_raw(2, 2);
    try {
      for (int fi = 0; fi < nf; ++fi) {
        const double f = sc.freqs_hz[static_cast<size_t>(fi)];
        detail::build_trial_frequency(sc, d, static_cast<std::uint64_t>(trial), fi,
                                      gamma_nom[static_cast<size_t>(fi)],
                                      z0_nom[static_cast<size_t>(fi)], fd, dut_raw);
        auto sol = mtrl::solve_frequency(fd, ls, gamma_nom[static_cast<size_t>(fi)]);
        auto dut = mtrl::apply_calibration(sol, dut_raw);
        double* slot =
            &values[(static_cast<size_t>(trial) * static_cast<size_t>(nf) +
                     static_cast<size_t>(fi)) *
                    static_cast<size_t>(nq)];
        slot[0] = detail::eps_from_gamma(sol.gamma, f);
        slot[1] = 20.0 / std::log(10.0) * sol.gamma.real();
        slot[2] = std::abs(dut(0, 0));
        slot[3] = std::abs(dut(1, 0));
      }
      ok[static_cast<size_t>(trial)] = 1;
    } catch (const std::exception&) {
      ok[static_cast<size_t>(trial)] = 0;
    }
  };

  if (threads <= 1) {
    for (int t = 0; t < nt; ++t) run_trial(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < nt; t = next.fetch_add(1)) run_trial(t);
      });
    for (auto& th : pool) th.join();
  }

  McStats st;
  st.freqs_hz = sc.freqs_hz;
  st.names = quantity_names();
  st.trials = nt;
  for (int t = 0; t < nt; ++t)
    if (!ok[static_cast<size_t>(t)]) ++st.dropped;
  if (st.dropped > 0.01 * nt)
    throw McError("Monte-Carlo drop rate " + std::to_string(st.dropped) + "/" +
                  std::to_string(nt) + " exceeds 1%");
  const int kept = nt - st.dropped;
  if (kept < 2) throw McError("fewer than 2 surviving Monte-Carlo trials");

  st.mean.assign(static_cast<size_t>(nq), std::vector<double>(static_cast<size_t>(nf), 0.0));
  st.stddev.assign(static_cast<size_t>(nq), std::vector<double>(static_cast<size_t>(nf), 0.0));
  for (int q = 0; q < nq; ++q)
    for (int fi = 0; fi < nf; ++fi) {
      double mu = 0.0;
      for (int t = 0; t < nt; ++t)
        if (ok[static_cast<size_t>(t)])
          mu += values[(static_cast<size_t>(t) * static_cast<size_t>(nf) +
                        static_cast<size_t>(fi)) *
                           static_cast<size_t>(nq) +
                       static_cast<size_t>(q)];
      mu /= kept;
      double acc = 0.0;
      for (int t = 0; t < nt; ++t)
        if (ok[static_cast<size_t>(t)]) {
          const double v = values[(static_cast<size_t>(t) * static_cast<size_t>(nf) +
                                   static_cast<size_t>(fi)) *
                                      static_cast<size_t>(nq) +
                                  static_cast<size_t>(q)];
          acc += (v - mu) * (v - mu);
        }
      st.mean[static_cast<size_t>(q)][static_cast<size_t>(fi)] = mu;
      st.stddev[static_cast<size_t>(q)][static_cast<size_t>(fi)] = std::sqrt(acc / (kept - 1));
    }
  return st;
}

struct LinearStats {
  std::vector<double> freqs_hz;
  std::vector<std::string> names;
  std::vector<std::vector<double>> value, stddev;  // [q][f]
};

// Linear-propagation counterpart of run_mc on the same scenario: noise and
// converted line-mismatch blocks per standard, length and reflect-asymmetry
// sources, one uncertain calibration per frequency.
inline LinearStats linear_stats(const McScenario& sc) {
  sc.validate();
  mtrl::LineSet ls = sc.line_set();
  SyntheticDataset ds = synthesize_dataset(sc);
  const int nf = static_cast<int>(sc.freqs_hz.size());
  const int nq = static_cast<int>(quantity_names().size());

  LinearStats st;
  st.freqs_hz = sc.freqs_hz;
  st.names = quantity_names();
  st.value.assign(static_cast<size_t>(nq), std::vector<double>(static_cast<size_t>(nf), 0.0));
  st.stddev.assign(static_cast<size_t>(nq), std::vector<double>(static_cast<size_t>(nf), 0.0));

  for (int fi = 0; fi < nf; ++fi) {
    const double f = sc.freqs_hz[static_cast<size_t>(fi)];
    const auto& fd = ds.data[static_cast<size_t>(fi)];
    const Complex gamma_est = ds.gamma_nominal[static_cast<size_t>(fi)];

    auto sol = mtrl::solve_frequency(fd, ls, gamma_est);

    gum::FrequencyUncertaintyModel um;
    um.u_length = sc.u_length;
    um.u_delta = sc.u_delta;
    const Eigen::MatrixXd noise = Eigen::MatrixXd::Identity(8, 8) * sc.noise_std * sc.noise_std;
    Eigen::MatrixXd sgg = cpw::sigma_gamma_z(sc.geometry, f);
    for (int i = 0; i < ls.size(); ++i) {
      um.sigma_noise.push_back(noise);
      Eigen::MatrixXd sigma_t = mismatch::sigma_I_for_line(sol, ls.dl(i), sgg);
      numkit::Mat<Complex> t_mean = network::s_to_t(fd.line_s[static_cast<size_t>(i)]);
      um.sigma_mismatch.push_back(mismatch::sigma_t_to_s(t_mean, sigma_t));
    }
    um.sigma_reflect = noise;
    um.sigma_dut = noise;

    gum::PropagatedCalibration pc = gum::propagate_frequency(
        f, fd, &ds.dut_raw[static_cast<size_t>(fi)], ls, um, gamma_est);
    gum::BudgetReport rep = gum::budget(pc, "by-source");
    for (int q = 0; q < nq; ++q) {
      st.value[static_cast<size_t>(q)][static_cast<size_t>(fi)] =
          rep.quantities[static_cast<size_t>(q)].value;
      st.stddev[static_cast<size_t>(q)][static_cast<size_t>(fi)] =
          rep.quantities[static_cast<size_t>(q)].std_total;
    }
  }
  return st;
}

struct ComparisonRow {
  std::string name;
  std::vector<double> rel_err;  // per frequency; NaN where incomparable
  double avg = 0.0;             // frequency average over comparable points
  int incomparable = 0;
  bool pass = false;
};

struct ComparisonReport {
  double tolerance = 0.10;
  std::vector<ComparisonRow> rows;
  bool pass = false;
};

inline ComparisonReport compare_linear_vs_mc(const LinearStats& lin, const McStats& mc,
                                             double tolerance = 0.10) {
  if (lin.freqs_hz != mc.freqs_hz || lin.names != mc.names)
    throw McError("linear and Monte-Carlo statistics are on different grids");
  ComparisonReport rep;
  rep.tolerance = tolerance;
  rep.pass = true;
  for (size_t q = 0; q < lin.names.size(); ++q) {
    ComparisonRow row;
    row.name = lin.names[q];
    double acc = 0.0;
    int cnt = 0;
    for (size_t fi = 0; fi < lin.freqs_hz.size(); ++fi) {
      const double sm = mc.stddev[q][fi];
      const double sl = lin.stddev[q][fi];
      if (sm == 0.0) {
        if (sl == 0.0) {
          row.rel_err.push_back(0.0);
          ++cnt;
        } else {
          row.rel_err.push_back(std::nan(""));
          ++row.incomparable;
        }
        continue;
      }
      const double e = std::abs(sl - sm) / sm;
      row.rel_err.push_back(e);
      acc += e;
      ++cnt;
    }
    row.avg = cnt ? acc / cnt : 0.0;
    row.pass = (row.incomparable == 0) && (row.avg <= tolerance);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace utrl::mc
