// Acceptance checks for the calibration library and CLI. Each check prints a
// single pass/fail line; the process exits nonzero if any check fails.
//
//  1. exact recovery of gamma, reflect and DUT from noiseless data
//  2. eigenvalue structure {-lambda, 0, 0, +lambda} against a dense solver
//  3. measurement-derived weighting equals the model weighting
//  4. uncertainty-pipeline Jacobian against central finite differences
//  5. linear propagation against a full Monte-Carlo run
//  6. additivity of the budget files the CLI emits
//  7. line-mismatch covariance against Monte-Carlo draws
//  8. file round trips and byte-identical CLI reruns

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "synthetic.hpp"
#include "utrl/cpw/model.hpp"
#include "utrl/gum/propagate.hpp"
#include "utrl/mc/harness.hpp"
#include "utrl/mismatch/mismatch.hpp"
#include "utrl/network/covariance_set.hpp"
#include "utrl/network/touchstone.hpp"

namespace fs = std::filesystem;
using namespace utrl;
using numkit::Complex;
using numkit::Mat;

namespace {

// pinned tolerances
constexpr double kTolRecovery = 1e-9;
constexpr double kMaxRecoverySeconds = 5.0;
constexpr double kTolEig = 1e-9;
constexpr double kTolWeighting = 1e-8;
constexpr double kTolJacobian = 1e-5;
constexpr int kJacobianConfigs = 20;
constexpr double kTolLinearVsMc = 0.10;
constexpr int kMcTrials = 1000;
constexpr double kMaxMcSeconds = 600.0;
constexpr double kTolAdditivity = 1e-9;
constexpr double kTolMismatchMc = 0.10;
constexpr int kMismatchTrials = 5000;
constexpr double kTolRoundTrip = 1e-12;

int g_failures = 0;

void report(int idx, const std::string& what, bool ok) {
  std::printf("[%d] %-68s %s\n", idx, what.c_str(), ok ? "PASS" : "FAIL");
  if (!ok) ++g_failures;
}

Complex gamma_true(double f_hz) {
  const double eps_eff = 5.1;
  return Complex(40.0 * f_hz / 60e9,
                 2.0 * M_PI * f_hz / mtrl::kSpeedOfLight * std::sqrt(eps_eff));
}

struct Quantities {
  double eps, loss, s11, s21;
};

Quantities plain_quantities(const mtrl::FrequencyData<Complex>& fd, const mtrl::LineSet& lines,
                            Complex gamma_est, const Mat<Complex>& dut_raw, double f_hz) {
  auto sol = mtrl::solve_frequency(fd, lines, gamma_est);
  auto dut = mtrl::apply_calibration(sol, dut_raw);
  const double root = mtrl::kSpeedOfLight * sol.gamma.imag() / (2.0 * M_PI * f_hz);
  return {root * root, 20.0 / std::log(10.0) * sol.gamma.real(), std::abs(dut(0, 0)),
          std::abs(dut(1, 0))};
}

// ---------------------------------------------------------------------------
// 1. exact recovery
// ---------------------------------------------------------------------------

bool check_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  bool ok = true;

  for (int n : {2, 3, 6}) {
    mtrl::LineSet lines;
    const std::vector<double> all = {200e-6, 900e-6, 450e-6, 1800e-6, 3500e-6, 5250e-6};
    lines.lengths_m.assign(all.begin(), all.begin() + n);
    lines.thru_index = 0;
    lines.reflect_estimate = Complex(1.0, 0.0);

    testing::SyntheticSetup st;
    st.box_a = testing::random_box(rng);
    st.box_b = testing::random_box(rng);
    st.gamma_reflect = Complex(0.96) * std::exp(Complex(0.0, 15.0 * M_PI / 180.0));
    st.delta1 = 25e-6;
    st.delta2 = 40e-6;

    Mat<Complex> dut_s(2, 2, {Complex(0.25, 0.1), Complex(0.65, -0.2), Complex(0.65, -0.2),
                              Complex(0.1, -0.3)});

    std::vector<double> freqs;
    std::vector<mtrl::FrequencyData<Complex>> data;
    std::vector<Mat<Complex>> dut_raw;
    for (int i = 0; i < 50; ++i) {
      const double f = 1e9 + (60e9 - 1e9) * i / 49.0;
      freqs.push_back(f);
      st.gamma = gamma_true(f);
      data.push_back(testing::synth_frequency(st, lines));
      dut_raw.push_back(testing::embed(st, network::s_to_t(dut_s)));
    }

    mtrl::SweepResult sweep = mtrl::calibrate_sweep(freqs, data, lines, 5.0);
    for (size_t i = 0; i < freqs.size(); ++i) {
      const auto& sol = sweep.solutions[i];
      if (!sol.valid) {
        ok = false;
        continue;
      }
      const Complex g = gamma_true(freqs[i]);
      if (std::abs(sol.gamma - g) > kTolRecovery * std::abs(g)) ok = false;
      if (std::abs(sol.gamma_reflect - st.gamma_reflect) > kTolRecovery) ok = false;
      Mat<Complex> dut = mtrl::apply_calibration(sol, dut_raw[i]);
      if ((dut - Mat<Complex>(network::t_to_s(network::s_to_t(dut_s)))).value_norm() >
          kTolRecovery)
        ok = false;
    }
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > kMaxRecoverySeconds) ok = false;
  return ok;
}

// ---------------------------------------------------------------------------
// 2. eigenvalue structure
// ---------------------------------------------------------------------------

bool check_eigenstructure() {
  std::mt19937_64 rng(211);
  bool ok = true;
  for (int cfg = 0; cfg < 5; ++cfg) {
    mtrl::LineSet lines = testing::cpw_lines();
    testing::SyntheticSetup st{testing::random_box(rng), testing::random_box(rng),
                               Complex(20.0 + 5.0 * cfg, 1200.0 + 300.0 * cfg),
                               Complex(0.95, 0.0), 0.0, 0.0};
    auto fd = testing::synth_frequency(st, lines);
    std::vector<Mat<Complex>> t_meas;
    for (const auto& s : fd.line_s) t_meas.push_back(network::s_to_t(s));
    auto sys = mtrl::build_system(t_meas, lines);
    Mat<Complex> w = mtrl::model_weighting(lines, st.gamma);
    auto eig = mtrl::solve_eigensystem(sys, w);

    const double lam_model = mtrl::model_lambda(lines, st.gamma);
    if (std::abs(std::abs(eig.lambda) - lam_model) > kTolEig * lam_model) ok = false;

    // dense oracle on the same 4x4 matrix
    Eigen::Matrix4cd f;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) f(i, j) = eig.F(i, j);
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(f);
    std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + 4);
    std::sort(ev.begin(), ev.end(),
              [](Complex a, Complex b) { return a.real() < b.real(); });
    if (std::abs(ev[0] + Complex(lam_model)) > kTolEig * lam_model) ok = false;
    if (std::abs(ev[1]) > kTolEig * lam_model) ok = false;
    if (std::abs(ev[2]) > kTolEig * lam_model) ok = false;
    if (std::abs(ev[3] - Complex(lam_model)) > kTolEig * lam_model) ok = false;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 3. weighting equivalence
// ---------------------------------------------------------------------------

bool check_weighting() {
  std::mt19937_64 rng(311);
  bool ok = true;
  for (int cfg = 0; cfg < 5; ++cfg) {
    mtrl::LineSet lines = testing::cpw_lines();
    testing::SyntheticSetup st{testing::random_box(rng), testing::random_box(rng),
                               Complex(15.0 + 7.0 * cfg, 900.0 + 400.0 * cfg),
                               Complex(0.95, 0.0), 0.0, 0.0};
    auto fd = testing::synth_frequency(st, lines);
    std::vector<Mat<Complex>> t_meas;
    for (const auto& s : fd.line_s) t_meas.push_back(network::s_to_t(s));
    auto sys = mtrl::build_system(t_meas, lines);
    Mat<Complex> wd = mtrl::weighting_from_measurements(sys, lines, st.gamma * 1.004);
    Mat<Complex> wm = mtrl::model_weighting(lines, st.gamma);
    if ((wd - wm).value_norm() > kTolWeighting * wm.value_norm()) ok = false;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 4. pipeline Jacobian against finite differences
// ---------------------------------------------------------------------------

bool check_jacobian() {
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> uf(10e9, 60e9);
  bool ok = true;

  for (int cfg = 0; cfg < kJacobianConfigs; ++cfg) {
    const double f_hz = uf(rng);
    mtrl::LineSet lines = testing::cpw_lines();
    testing::SyntheticSetup st;
    st.box_a = testing::random_box(rng);
    st.box_b = testing::random_box(rng);
    st.gamma = gamma_true(f_hz);
    st.gamma_reflect = Complex(0.94) * std::exp(Complex(0.0, 25.0 * M_PI / 180.0));
    st.delta1 = 30e-6;
    st.delta2 = 45e-6;
    auto fd = testing::synth_frequency(st, lines);
    Mat<Complex> dut_s(2, 2, {Complex(0.2, 0.1), Complex(0.7, 0.0), Complex(0.7, 0.0),
                              Complex(0.15, -0.05)});
    Mat<Complex> dut_raw = testing::embed(st, network::s_to_t(dut_s));
    const Complex gamma_est = st.gamma * 1.004;

    gum::FrequencyUncertaintyModel um;  // covariances are irrelevant to gradients
    gum::PropagatedCalibration pc =
        gum::propagate_frequency(f_hz, fd, &dut_raw, lines, um, gamma_est);
    auto quantities = gum::budget_quantities(pc);

    // per-quantity scale for near-zero entries
    std::vector<double> row_scale;
    for (const auto& [name, x] : quantities)
      row_scale.push_back(x.g.size() ? x.g.cwiseAbs().maxCoeff() : 0.0);

    int asym_seen = 0;
    for (const auto& tag : pc.sources) {
      const auto& src = pc.reg.source(tag.registry_id);
      const int dim = static_cast<int>(src.mean.size());
      const int asym_port = (tag.kind == gum::SourceKind::reflect_asymmetry) ? asym_seen++ : -1;

      for (int d = 0; d < dim; ++d) {
        // evaluate the plain pipeline with input (tag, d) shifted by step
        auto eval = [&](double step) {
          mtrl::FrequencyData<Complex> fdp = fd;
          mtrl::LineSet lp = lines;
          Mat<Complex> dutp = dut_raw;
          switch (tag.kind) {
            case gum::SourceKind::noise:
            case gum::SourceKind::line_mismatch: {
              Eigen::VectorXd v(8);
              Mat<Complex>* m = nullptr;
              if (tag.target == "reflect")
                m = &fdp.reflect_s;
              else if (tag.target == "dut")
                m = &dutp;
              else
                m = &fdp.line_s[static_cast<size_t>(std::stoi(tag.target.substr(3)))];
              v = network::vec_ri(*m);
              v(d) += step;
              *m = network::from_vec_ri(v);
              break;
            }
            case gum::SourceKind::length: {
              const int which = std::stoi(tag.target.substr(3));
              fdp.dl.clear();
              for (int i = 0; i < lines.size(); ++i) {
                double dl = lines.dl(i);
                if (which == lines.thru_index && i != lines.thru_index) dl -= step;
                if (which != lines.thru_index && i == which) dl += step;
                fdp.dl.push_back(dl);
              }
              break;
            }
            case gum::SourceKind::reflect_asymmetry:
              (asym_port == 0 ? fdp.delta1 : fdp.delta2) += step;
              break;
            case gum::SourceKind::other_forward:
              lp.reflect_estimate += (d == 0) ? Complex(step, 0) : Complex(0, step);
              break;
          }
          return plain_quantities(fdp, lp, gamma_est, dutp, f_hz);
        };

        const double h = (tag.kind == gum::SourceKind::length ||
                          tag.kind == gum::SourceKind::reflect_asymmetry)
                             ? 1e-8
                             : 1e-6;
        Quantities qp = eval(h), qm = eval(-h);
        const double fd_grad[4] = {(qp.eps - qm.eps) / (2.0 * h),
                                   (qp.loss - qm.loss) / (2.0 * h),
                                   (qp.s11 - qm.s11) / (2.0 * h),
                                   (qp.s21 - qm.s21) / (2.0 * h)};
        for (size_t q = 0; q < quantities.size(); ++q) {
          const double an = quantities[q].second.g(src.offset + d);
          const double den =
              std::max({std::abs(an), std::abs(fd_grad[q]), 1e-3 * row_scale[q]});
          if (den == 0.0) continue;
          if (std::abs(fd_grad[q] - an) / den > kTolJacobian) ok = false;
        }
      }
    }
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 5. linear propagation against Monte-Carlo
// ---------------------------------------------------------------------------

bool check_linear_vs_mc() {
  const auto t0 = std::chrono::steady_clock::now();
  mc::McScenario sc = mc::default_scenario();
  sc.trials = kMcTrials;
  const int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  mc::McStats mcs = mc::run_mc(sc, threads);
  mc::LinearStats lin = mc::linear_stats(sc);
  mc::ComparisonReport rep = mc::compare_linear_vs_mc(lin, mcs, kTolLinearVsMc);

  bool ok = rep.pass;
  for (const auto& row : rep.rows)
    if (row.incomparable != 0 || !(row.avg <= kTolLinearVsMc)) ok = false;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > kMaxMcSeconds) ok = false;
  return ok;
}

// ---------------------------------------------------------------------------
// 6 and 8 need the CLI
// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(UTRL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool check_budget_additivity(const fs::path& work) {
  if (run_cli("synth --out " + (work / "data").string()) != 0) return false;
  if (run_cli("uncert --recipe " + (work / "data" / "recipe.json").string() + " --out " +
              (work / "uncert").string()) != 0)
    return false;

  bool ok = true;
  int rows = 0;
  for (const std::string name : {"budget_by_source.csv", "budget_by_standard.csv"}) {
    std::istringstream in(slurp(work / "uncert" / name));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      std::getline(row, cell, ',');
      std::getline(row, cell, ',');
      std::getline(row, cell, ',');
      const double total = std::stod(cell);
      double sum = 0.0;
      while (std::getline(row, cell, ',')) sum += std::stod(cell);
      if (std::abs(sum - total) > kTolAdditivity * std::max(total, 1e-300)) ok = false;
      ++rows;
    }
  }
  if (rows != 2 * 30 * 4) ok = false;
  return ok;
}

// ---------------------------------------------------------------------------
// 7. line-mismatch covariance against Monte-Carlo
// ---------------------------------------------------------------------------

bool check_mismatch_covariance() {
  std::mt19937_64 rng(701);
  mtrl::LineSet lines = testing::cpw_lines();
  testing::SyntheticSetup st{testing::random_box(rng), testing::random_box(rng),
                             Complex(24.0, 2100.0), Complex(0.97, 0.0), 0.0, 0.0};
  auto fd = testing::synth_frequency(st, lines);
  auto sol = mtrl::solve_frequency(fd, lines, st.gamma * 1.003);

  const double length = 1.7e-3;
  cpw::CpwGeometry geom = cpw::default_geometry();
  Eigen::MatrixXd sgg = cpw::sigma_gamma_z(geom, 55e9);
  Eigen::MatrixXd sigma = mismatch::sigma_I_for_line(sol, length, sgg);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sgg);
  Eigen::MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  std::normal_distribution<double> nd(0.0, 1.0);

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(8);
  std::vector<Eigen::VectorXd> samples;
  for (int trial = 0; trial < kMismatchTrials; ++trial) {
    Eigen::VectorXd xi(4);
    for (int i = 0; i < 4; ++i) xi(i) = nd(rng);
    Eigen::VectorXd d = root * xi;
    Complex refl(d(0), d(1));
    Complex gam = sol.gamma + Complex(d(2), d(3));
    Mat<Complex> lt = mismatch::mismatched_line_t(refl, gam, length);
    Mat<Complex> x = sol.coeffs.xtilde;
    const Complex scale[4] = {sol.a11 * sol.b11, sol.b11, sol.a11, Complex(1)};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) x(i, j) = x(i, j) * scale[j];
    Mat<Complex> v = x * lt.vec() * sol.k;
    Eigen::VectorXd h(8);
    for (int i = 0; i < 4; ++i) {
      h(2 * i) = v(i, 0).real();
      h(2 * i + 1) = v(i, 0).imag();
    }
    samples.push_back(h);
    mu += h;
  }
  mu /= kMismatchTrials;
  Eigen::MatrixXd sample_cov = Eigen::MatrixXd::Zero(8, 8);
  for (const auto& h : samples) sample_cov += (h - mu) * (h - mu).transpose();
  sample_cov /= (kMismatchTrials - 1);

  const double scale = sigma.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return false;
  bool ok = true;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (std::abs(sample_cov(i, j) - sigma(i, j)) > kTolMismatchMc * scale) ok = false;
  return ok;
}

// ---------------------------------------------------------------------------
// 8. round trips and determinism
// ---------------------------------------------------------------------------

bool check_round_trips(const fs::path& work) {
  bool ok = true;
  std::mt19937_64 rng(811);
  std::normal_distribution<double> nd(0.0, 1.0);

  // touchstone
  network::TwoPortRecord rec;
  for (int i = 0; i < 25; ++i) {
    rec.frequencies_hz.push_back(1e9 * (i + 1) * 1.37);
    Mat<Complex> s(2, 2);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) s(a, b) = Complex(nd(rng), nd(rng));
    rec.s.push_back(s);
  }
  const fs::path sp = work / "roundtrip.s2p";
  network::write_touchstone(rec, sp.string());
  network::TwoPortRecord back = network::read_touchstone(sp.string());
  if (back.size() != rec.size()) return false;
  for (size_t i = 0; i < rec.s.size(); ++i) {
    if (std::abs(back.frequencies_hz[i] - rec.frequencies_hz[i]) >
        kTolRoundTrip * rec.frequencies_hz[i])
      ok = false;
    if ((back.s[i] - rec.s[i]).value_norm() > kTolRoundTrip) ok = false;
  }

  // covariance set
  network::CovarianceSet cs;
  cs.standard_id = "rt";
  cs.frequencies_hz = {1e9, 2e9};
  cs.sample_count = 7;
  for (int f = 0; f < 2; ++f) {
    Eigen::MatrixXd a(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) a(i, j) = nd(rng);
    cs.sigma_noise.push_back(a * a.transpose());
  }
  const fs::path cp = work / "roundtrip_cov.json";
  network::write_covariance_set(cs, cp.string());
  network::CovarianceSet cback = network::read_covariance_set(cp.string());
  if (cback.sample_count != 7 || cback.sigma_noise.size() != 2) return false;
  for (int f = 0; f < 2; ++f)
    if ((cback.sigma_noise[f] - cs.sigma_noise[f]).cwiseAbs().maxCoeff() >
        kTolRoundTrip * cs.sigma_noise[f].cwiseAbs().maxCoeff())
      ok = false;

  // byte-identical CLI reruns (dataset produced by check 6)
  const std::string recipe = (work / "data" / "recipe.json").string();
  const std::string scen = (work / "data" / "scenario.json").string();
  if (run_cli("calibrate --recipe " + recipe + " --out " + (work / "cal_a").string()) != 0)
    return false;
  if (run_cli("calibrate --recipe " + recipe + " --out " + (work / "cal_b").string()) != 0)
    return false;
  if (slurp(work / "cal_a" / "calibration.csv") != slurp(work / "cal_b" / "calibration.csv"))
    ok = false;
  if (slurp(work / "cal_a" / "solution.json") != slurp(work / "cal_b" / "solution.json"))
    ok = false;
  const std::string mc_args = "mc --scenario " + scen + " --trials 50 --seed 9 --threads ";
  if (run_cli(mc_args + "1 --out " + (work / "mc_a").string()) != 0) return false;
  if (run_cli(mc_args + "4 --out " + (work / "mc_b").string()) != 0) return false;
  if (slurp(work / "mc_a" / "mc_stats.csv") != slurp(work / "mc_b" / "mc_stats.csv")) ok = false;
  return ok;
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "utrl_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  report(1, "noiseless data recovered to 1e-9 for 2/3/6 standards, 50 points, <5 s",
         check_recovery());
  report(2, "eigenvalues are {-lambda, 0, 0, +lambda} to 1e-9, dense-solver oracle",
         check_eigenstructure());
  report(3, "data-derived weighting matches the model weighting to 1e-8", check_weighting());
  report(4, "pipeline Jacobian matches finite differences to 1e-5 over 20 configs",
         check_jacobian());
  report(5, "linear stds within 10% of 1000-trial Monte-Carlo, 30 points, <10 min",
         check_linear_vs_mc());
  report(6, "every emitted budget row is additive to 1e-9", check_budget_additivity(work));
  report(7, "mismatch covariance within 10% of 5000 Monte-Carlo draws",
         check_mismatch_covariance());
  report(8, "file round trips to 1e-12 and byte-identical CLI reruns", check_round_trips(work));

  if (g_failures) {
    std::printf("%d acceptance check(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance checks passed\n");
  return 0;
}
