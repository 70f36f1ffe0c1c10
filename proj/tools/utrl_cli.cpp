// Batch front end for the calibration library.
//
// Subcommands:
//   calibrate  run the calibration over a recipe, write solution + table
//   apply      calibrate and de-embed the recipe's DUT, write .s2p + stds
//   uncert     propagate the recipe's uncertainty model, write budgets
//   mc         run a Monte-Carlo scenario and compare to linear propagation
//   synth      synthesize a dataset (plus a ready recipe) from a scenario
//   cov        build a covariance file from a directory of repeated sweeps
//
// Exit codes: 0 success, 2 data/input errors, 3 numerical failures.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "utrl/cpw/model.hpp"
#include "utrl/gum/propagate.hpp"
#include "utrl/mc/harness.hpp"
#include "utrl/mismatch/mismatch.hpp"
#include "utrl/mtrl/calibration.hpp"
#include "utrl/network/covariance_set.hpp"
#include "utrl/network/sample_covariance.hpp"
#include "utrl/network/touchstone.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using utrl::numkit::Complex;
using utrl::numkit::Mat;

namespace {

constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Recipe
// ---------------------------------------------------------------------------

struct StandardInput {
  std::string file;
  double length_m = 0.0;
  std::string covariance_file;  // optional noise covariance (CovarianceSet)
};

struct UncertaintyInput {
  bool present = false;
  double noise_std = 0.0;  // fallback when no covariance files are given
  double u_length = 40e-6;
  double u_delta = 40e-6;
  std::string geometry_file;  // optional; enables the line-mismatch blocks
};

struct Recipe {
  std::vector<StandardInput> standards;
  int thru_index = 0;
  std::string reflect_file;
  Complex reflect_estimate{-1.0, 0.0};
  double delta1 = 0.0, delta2 = 0.0;
  std::string dut_file;  // optional
  double eps_eff_guess = 1.0;
  UncertaintyInput uncertainty;
};

Complex cplx_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Recipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open recipe file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed recipe file " + path + ": " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).string();
  };

  Recipe r;
  try {
    for (const auto& s : j.at("standards")) {
      StandardInput si;
      si.file = resolve(s.at("file").get<std::string>());
      si.length_m = s.at("length_m").get<double>();
      if (s.contains("covariance")) si.covariance_file = resolve(s["covariance"].get<std::string>());
      r.standards.push_back(std::move(si));
    }
    r.thru_index = j.value("thru_index", 0);
    const auto& refl = j.at("reflect");
    r.reflect_file = resolve(refl.at("file").get<std::string>());
    if (refl.contains("estimate")) r.reflect_estimate = cplx_from(refl["estimate"]);
    r.delta1 = refl.value("delta1", 0.0);
    r.delta2 = refl.value("delta2", 0.0);
    if (j.contains("dut")) r.dut_file = resolve(j["dut"].get<std::string>());
    r.eps_eff_guess = j.value("eps_eff_guess", 1.0);
    if (j.contains("uncertainty")) {
      const auto& u = j["uncertainty"];
      r.uncertainty.present = true;
      r.uncertainty.noise_std = u.value("noise_std", 0.0);
      r.uncertainty.u_length = u.value("u_length", 40e-6);
      r.uncertainty.u_delta = u.value("u_delta", 40e-6);
      if (u.contains("geometry")) r.uncertainty.geometry_file = resolve(u["geometry"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw DataError("recipe " + path + " is missing required fields: " + e.what());
  }
  if (r.standards.size() < 2) throw DataError("recipe needs at least two line standards");
  return r;
}

// Loaded measurement set on a common frequency grid.
struct LoadedRecipe {
  Recipe recipe;
  utrl::mtrl::LineSet lines;
  std::vector<double> freqs_hz;
  std::vector<utrl::mtrl::FrequencyData<Complex>> data;
  std::vector<Mat<Complex>> dut;                              // empty if no DUT
  std::vector<std::vector<Eigen::MatrixXd>> noise_per_std;    // [std][freq], may be empty
};

utrl::network::TwoPortRecord load_record(const std::string& path) {
  if (!fs::exists(path)) throw DataError("measurement file not found: " + path);
  return utrl::network::read_touchstone(path);
}

LoadedRecipe load_measurements(const Recipe& r) {
  LoadedRecipe lr;
  lr.recipe = r;
  for (const auto& s : r.standards) lr.lines.lengths_m.push_back(s.length_m);
  lr.lines.thru_index = r.thru_index;
  lr.lines.reflect_estimate = r.reflect_estimate;
  lr.lines.validate();

  std::vector<utrl::network::TwoPortRecord> recs;
  for (const auto& s : r.standards) recs.push_back(load_record(s.file));
  utrl::network::TwoPortRecord refl = load_record(r.reflect_file);
  std::optional<utrl::network::TwoPortRecord> dut;
  if (!r.dut_file.empty()) dut = load_record(r.dut_file);

  lr.freqs_hz = recs.front().frequencies_hz;
  auto check_grid = [&](const utrl::network::TwoPortRecord& rec, const std::string& what) {
    if (rec.frequencies_hz != lr.freqs_hz)
      throw DataError("frequency grid of " + what + " does not match the first standard");
  };
  for (size_t i = 1; i < recs.size(); ++i) check_grid(recs[i], r.standards[i].file);
  check_grid(refl, r.reflect_file);
  if (dut) check_grid(*dut, r.dut_file);

  for (size_t fi = 0; fi < lr.freqs_hz.size(); ++fi) {
    utrl::mtrl::FrequencyData<Complex> fd;
    for (const auto& rec : recs) fd.line_s.push_back(rec.s[fi]);
    fd.reflect_s = refl.s[fi];
    fd.delta1 = r.delta1;
    fd.delta2 = r.delta2;
    lr.data.push_back(std::move(fd));
    if (dut) lr.dut.push_back(dut->s[fi]);
  }

  for (const auto& s : r.standards) {
    std::vector<Eigen::MatrixXd> blocks;
    if (!s.covariance_file.empty()) {
      utrl::network::CovarianceSet cs = utrl::network::read_covariance_set(s.covariance_file);
      if (cs.frequencies_hz != lr.freqs_hz)
        throw DataError("covariance grid of " + s.covariance_file + " does not match the data");
      for (size_t fi = 0; fi < lr.freqs_hz.size(); ++fi) blocks.push_back(cs.total(fi));
    }
    lr.noise_per_std.push_back(std::move(blocks));
  }
  return lr;
}

// ---------------------------------------------------------------------------
// Shared output helpers
// ---------------------------------------------------------------------------

void ensure_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory: " + out);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw DataError("cannot write output file: " + p.string());
  return f;
}

json solution_to_json(const utrl::mtrl::CalibrationSolution<Complex>& sol) {
  auto c = [](Complex z) { return json{z.real(), z.imag()}; };
  json j;
  j["valid"] = sol.valid;
  if (!sol.valid) {
    j["flag"] = sol.flag;
    return j;
  }
  j["gamma"] = c(sol.gamma);
  j["k"] = c(sol.k);
  j["a11"] = c(sol.a11);
  j["b11"] = c(sol.b11);
  j["lambda"] = c(sol.lambda);
  j["gamma_reflect"] = c(sol.gamma_reflect);
  j["w_sign"] = sol.w_sign;
  json xt = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int jj = 0; jj < 4; ++jj) row.push_back(c(sol.coeffs.xtilde(i, jj)));
    xt.push_back(row);
  }
  j["xtilde"] = xt;
  return j;
}

struct SweepRun {
  LoadedRecipe lr;
  utrl::mtrl::SweepResult sweep;
  int flagged = 0;
};

SweepRun run_calibration(const Recipe& recipe, double eps_guess) {
  SweepRun run;
  run.lr = load_measurements(recipe);
  run.sweep = utrl::mtrl::calibrate_sweep(run.lr.freqs_hz, run.lr.data, run.lr.lines, eps_guess);
  for (const auto& sol : run.sweep.solutions)
    if (!sol.valid) ++run.flagged;
  return run;
}

int check_fail_threshold(const SweepRun& run, double fail_threshold) {
  const double frac =
      run.sweep.solutions.empty()
          ? 0.0
          : static_cast<double>(run.flagged) / static_cast<double>(run.sweep.solutions.size());
  if (frac > fail_threshold) {
    std::fprintf(stderr, "error: %d of %zu frequencies flagged (threshold %g):\n", run.flagged,
                 run.sweep.solutions.size(), fail_threshold);
    for (size_t fi = 0; fi < run.sweep.solutions.size(); ++fi)
      if (!run.sweep.solutions[fi].valid)
        std::fprintf(stderr, "  %s Hz: %s\n", fmt(run.lr.freqs_hz[fi]).c_str(),
                     run.sweep.solutions[fi].flag.c_str());
    return kExitNumerical;
  }
  return 0;
}

void write_calibration_outputs(const SweepRun& run, const std::string& out) {
  ensure_dir(out);
  json sols = json::array();
  auto csv = open_out(fs::path(out) / "calibration.csv");
  csv << "frequency_hz,eps_r_eff,loss_db_per_m,re_gamma,im_gamma,re_k,im_k,valid\n";
  for (size_t fi = 0; fi < run.lr.freqs_hz.size(); ++fi) {
    const auto& sol = run.sweep.solutions[fi];
    const double f = run.lr.freqs_hz[fi];
    json js = solution_to_json(sol);
    js["frequency_hz"] = f;
    sols.push_back(js);
    if (sol.valid) {
      const double root = utrl::mtrl::kSpeedOfLight * sol.gamma.imag() / (2.0 * M_PI * f);
      csv << fmt(f) << ',' << fmt(root * root) << ','
          << fmt(20.0 / std::log(10.0) * sol.gamma.real()) << ',' << fmt(sol.gamma.real()) << ','
          << fmt(sol.gamma.imag()) << ',' << fmt(sol.k.real()) << ',' << fmt(sol.k.imag())
          << ",1\n";
    } else {
      csv << fmt(f) << ",,,,,,,0\n";
    }
  }
  auto sj = open_out(fs::path(out) / "solution.json");
  sj << json{{"solutions", sols}}.dump(1) << '\n';
}

// Uncertainty model for one frequency from the recipe (needs the plain
// solution for the line-mismatch conversion).
utrl::gum::FrequencyUncertaintyModel build_um(const LoadedRecipe& lr, size_t fi,
                                              const utrl::mtrl::CalibrationSolution<Complex>& sol,
                                              const std::optional<utrl::cpw::CpwGeometry>& geom) {
  const auto& u = lr.recipe.uncertainty;
  utrl::gum::FrequencyUncertaintyModel um;
  um.u_length = u.u_length;
  um.u_delta = u.u_delta;
  const Eigen::MatrixXd fallback = Eigen::MatrixXd::Identity(8, 8) * u.noise_std * u.noise_std;
  for (size_t i = 0; i < lr.lines.lengths_m.size(); ++i) {
    const auto& blocks = lr.noise_per_std[i];
    um.sigma_noise.push_back(blocks.empty() ? fallback : blocks[fi]);
    if (geom) {
      Eigen::MatrixXd sgg = utrl::cpw::sigma_gamma_z(*geom, lr.freqs_hz[fi]);
      Eigen::MatrixXd st =
          utrl::mismatch::sigma_I_for_line(sol, lr.lines.dl(static_cast<int>(i)), sgg);
      Mat<Complex> tm = utrl::network::s_to_t(lr.data[fi].line_s[i]);
      um.sigma_mismatch.push_back(utrl::mismatch::sigma_t_to_s(tm, st));
    }
  }
  um.sigma_reflect = fallback;
  um.sigma_dut = fallback;
  return um;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_calibrate(const std::string& recipe_path, const std::string& out, double eps_guess_flag,
                  double fail_threshold) {
  Recipe r = load_recipe(recipe_path);
  const double eps = eps_guess_flag > 0.0 ? eps_guess_flag : r.eps_eff_guess;
  SweepRun run = run_calibration(r, eps);
  write_calibration_outputs(run, out);
  return check_fail_threshold(run, fail_threshold);
}

int cmd_apply(const std::string& recipe_path, const std::string& out, double eps_guess_flag,
              double fail_threshold) {
  Recipe r = load_recipe(recipe_path);
  if (r.dut_file.empty()) throw DataError("recipe has no DUT entry; nothing to apply to");
  const double eps = eps_guess_flag > 0.0 ? eps_guess_flag : r.eps_eff_guess;
  SweepRun run = run_calibration(r, eps);
  ensure_dir(out);

  std::optional<utrl::cpw::CpwGeometry> geom;
  if (r.uncertainty.present && !r.uncertainty.geometry_file.empty())
    geom = utrl::cpw::read_geometry(r.uncertainty.geometry_file);

  utrl::network::TwoPortRecord cal;
  cal.reference_ohm = 50.0;
  auto csv = open_out(fs::path(out) / "dut_cal_uncertainty.csv");
  csv << "frequency_hz,mag_s11,std_mag_s11,mag_s21,std_mag_s21\n";
  for (size_t fi = 0; fi < run.lr.freqs_hz.size(); ++fi) {
    const auto& sol = run.sweep.solutions[fi];
    if (!sol.valid) continue;
    Mat<Complex> s = utrl::mtrl::apply_calibration(sol, run.lr.dut[fi]);
    cal.frequencies_hz.push_back(run.lr.freqs_hz[fi]);
    cal.s.push_back(s);
    double std11 = 0.0, std21 = 0.0;
    if (r.uncertainty.present) {
      utrl::gum::FrequencyUncertaintyModel um = build_um(run.lr, fi, sol, geom);
      utrl::gum::PropagatedCalibration pc = utrl::gum::propagate_frequency(
          run.lr.freqs_hz[fi], run.lr.data[fi], &run.lr.dut[fi], run.lr.lines, um,
          run.sweep.gamma_est_used[fi]);
      Eigen::MatrixXd sigma = pc.reg.covariance();
      std11 = std::sqrt(std::max(0.0, utrl::gum::variance_of(abs(pc.dut_cal(0, 0)), sigma)));
      std21 = std::sqrt(std::max(0.0, utrl::gum::variance_of(abs(pc.dut_cal(1, 0)), sigma)));
    }
    csv << fmt(run.lr.freqs_hz[fi]) << ',' << fmt(std::abs(s(0, 0))) << ',' << fmt(std11) << ','
        << fmt(std::abs(s(1, 0))) << ',' << fmt(std21) << '\n';
  }
  utrl::network::write_touchstone(cal, (fs::path(out) / "dut_cal.s2p").string());
  return check_fail_threshold(run, fail_threshold);
}

int cmd_uncert(const std::string& recipe_path, const std::string& out, double eps_guess_flag,
               double fail_threshold) {
  Recipe r = load_recipe(recipe_path);
  if (!r.uncertainty.present) throw DataError("recipe has no uncertainty block");
  const double eps = eps_guess_flag > 0.0 ? eps_guess_flag : r.eps_eff_guess;
  SweepRun run = run_calibration(r, eps);
  ensure_dir(out);

  std::optional<utrl::cpw::CpwGeometry> geom;
  if (!r.uncertainty.geometry_file.empty())
    geom = utrl::cpw::read_geometry(r.uncertainty.geometry_file);

  // fixed group orders for the wide CSV columns
  std::vector<std::string> src_groups = {"noise", "length", "reflect-asymmetry", "line-mismatch",
                                         "other-forward"};
  std::vector<std::string> std_groups;
  for (size_t i = 0; i < r.standards.size(); ++i) std_groups.push_back("std" + std::to_string(i));
  std_groups.push_back("reflect");
  if (!r.dut_file.empty()) std_groups.push_back("dut");

  auto q_csv = open_out(fs::path(out) / "quantities.csv");
  q_csv << "frequency_hz,quantity,value,std,lo95,hi95\n";
  auto src_csv = open_out(fs::path(out) / "budget_by_source.csv");
  src_csv << "frequency_hz,quantity,total_variance";
  for (const auto& g : src_groups) src_csv << ',' << g;
  src_csv << '\n';
  auto std_csv = open_out(fs::path(out) / "budget_by_standard.csv");
  std_csv << "frequency_hz,quantity,total_variance";
  for (const auto& g : std_groups) std_csv << ',' << g;
  std_csv << '\n';

  json all = json::array();
  for (size_t fi = 0; fi < run.lr.freqs_hz.size(); ++fi) {
    const auto& sol = run.sweep.solutions[fi];
    if (!sol.valid) continue;
    utrl::gum::FrequencyUncertaintyModel um = build_um(run.lr, fi, sol, geom);
    const Mat<Complex>* dut = run.lr.dut.empty() ? nullptr : &run.lr.dut[fi];
    utrl::gum::PropagatedCalibration pc =
        utrl::gum::propagate_frequency(run.lr.freqs_hz[fi], run.lr.data[fi], dut, run.lr.lines,
                                       um, run.sweep.gamma_est_used[fi]);
    utrl::gum::BudgetReport by_src = utrl::gum::budget(pc, "by-source");
    utrl::gum::BudgetReport by_std = utrl::gum::budget(pc, "by-standard");

    auto share = [](const utrl::gum::QuantityBudget& qb, const std::string& g) {
      for (const auto& e : qb.shares)
        if (e.group == g) return e.variance;
      return 0.0;
    };
    for (size_t qi = 0; qi < by_src.quantities.size(); ++qi) {
      const auto& q = by_src.quantities[qi];
      q_csv << fmt(run.lr.freqs_hz[fi]) << ',' << q.name << ',' << fmt(q.value) << ','
            << fmt(q.std_total) << ',' << fmt(q.ci95_lo) << ',' << fmt(q.ci95_hi) << '\n';
      src_csv << fmt(run.lr.freqs_hz[fi]) << ',' << q.name << ','
              << fmt(q.std_total * q.std_total);
      for (const auto& g : src_groups) src_csv << ',' << fmt(share(q, g));
      src_csv << '\n';
      const auto& qs = by_std.quantities[qi];
      std_csv << fmt(run.lr.freqs_hz[fi]) << ',' << qs.name << ','
              << fmt(qs.std_total * qs.std_total);
      for (const auto& g : std_groups) std_csv << ',' << fmt(share(qs, g));
      std_csv << '\n';
    }

    json jf;
    jf["frequency_hz"] = run.lr.freqs_hz[fi];
    for (const auto& rep : {by_src, by_std}) {
      json jq = json::array();
      for (const auto& q : rep.quantities) {
        json e{{"name", q.name},    {"value", q.value},    {"std", q.std_total},
               {"lo95", q.ci95_lo}, {"hi95", q.ci95_hi}};
        json sh = json::object();
        for (const auto& s : q.shares) sh[s.group] = s.variance;
        e["shares"] = sh;
        jq.push_back(e);
      }
      jf[rep.grouping] = jq;
    }
    all.push_back(jf);
  }
  auto bj = open_out(fs::path(out) / "budget.json");
  bj << json{{"budgets", all}}.dump(1) << '\n';
  return check_fail_threshold(run, fail_threshold);
}

utrl::mc::McScenario load_scenario(const std::string& path) {
  try {
    return utrl::mc::read_scenario(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

int cmd_mc(const std::string& scenario_path, const std::string& out, int trials_flag,
           std::optional<std::uint64_t> seed_flag, int threads) {
  utrl::mc::McScenario sc = load_scenario(scenario_path);
  if (trials_flag > 0) sc.trials = trials_flag;
  if (seed_flag) sc.seed = *seed_flag;
  ensure_dir(out);

  utrl::mc::McStats mcs = utrl::mc::run_mc(sc, threads);
  utrl::mc::LinearStats lin = utrl::mc::linear_stats(sc);
  utrl::mc::ComparisonReport rep = utrl::mc::compare_linear_vs_mc(lin, mcs);

  auto write_stats = [&](const fs::path& p, const std::vector<std::vector<double>>& center,
                         const std::vector<std::vector<double>>& spread) {
    auto f = open_out(p);
    f << "frequency_hz";
    for (const auto& n : mcs.names) f << ',' << n << "_value," << n << "_std";
    f << '\n';
    for (size_t fi = 0; fi < mcs.freqs_hz.size(); ++fi) {
      f << fmt(mcs.freqs_hz[fi]);
      for (size_t q = 0; q < mcs.names.size(); ++q)
        f << ',' << fmt(center[q][fi]) << ',' << fmt(spread[q][fi]);
      f << '\n';
    }
  };
  write_stats(fs::path(out) / "mc_stats.csv", mcs.mean, mcs.stddev);
  write_stats(fs::path(out) / "linear_stats.csv", lin.value, lin.stddev);

  auto cmp = open_out(fs::path(out) / "comparison.csv");
  cmp << "quantity,avg_rel_err,incomparable,pass\n";
  json jrows = json::array();
  for (const auto& row : rep.rows) {
    cmp << row.name << ',' << fmt(row.avg) << ',' << row.incomparable << ','
        << (row.pass ? 1 : 0) << '\n';
    jrows.push_back({{"name", row.name},
                     {"avg_rel_err", row.avg},
                     {"incomparable", row.incomparable},
                     {"pass", row.pass}});
  }
  auto cj = open_out(fs::path(out) / "comparison.json");
  cj << json{{"tolerance", rep.tolerance},
             {"pass", rep.pass},
             {"trials", mcs.trials},
             {"dropped", mcs.dropped},
             {"rows", jrows}}
            .dump(1)
     << '\n';
  std::printf("mc: %d trials (%d dropped), linear-vs-mc %s\n", mcs.trials, mcs.dropped,
              rep.pass ? "pass" : "FAIL");
  return 0;
}

int cmd_synth(const std::string& scenario_path, const std::string& out) {
  utrl::mc::McScenario sc =
      scenario_path.empty() ? utrl::mc::default_scenario() : load_scenario(scenario_path);
  ensure_dir(out);
  if (scenario_path.empty())
    utrl::mc::write_scenario(sc, (fs::path(out) / "scenario.json").string());
  utrl::mc::SyntheticDataset ds = utrl::mc::synthesize_dataset(sc);

  auto write_rec = [&](const std::string& name, auto getter) {
    utrl::network::TwoPortRecord rec;
    rec.frequencies_hz = ds.freqs_hz;
    for (size_t fi = 0; fi < ds.freqs_hz.size(); ++fi) rec.s.push_back(getter(fi));
    utrl::network::write_touchstone(rec, (fs::path(out) / name).string());
  };

  json stds = json::array();
  for (size_t i = 0; i < sc.lengths_m.size(); ++i) {
    const std::string name = "std" + std::to_string(i) + ".s2p";
    write_rec(name, [&](size_t fi) { return ds.data[fi].line_s[i]; });
    stds.push_back({{"file", name}, {"length_m", sc.lengths_m[i]}});
  }
  write_rec("reflect.s2p", [&](size_t fi) { return ds.data[fi].reflect_s; });
  write_rec("dut.s2p", [&](size_t fi) { return ds.dut_raw[fi]; });
  utrl::cpw::write_geometry(sc.geometry, (fs::path(out) / "geometry.json").string());

  const double eps0 = std::pow(utrl::mtrl::kSpeedOfLight * ds.gamma_nominal[0].imag() /
                                   (2.0 * M_PI * ds.freqs_hz[0]),
                               2);
  json recipe;
  recipe["standards"] = stds;
  recipe["thru_index"] = sc.thru_index;
  recipe["reflect"] = {{"file", "reflect.s2p"},
                       {"estimate", {sc.reflect_estimate.real(), sc.reflect_estimate.imag()}},
                       {"delta1", sc.delta1},
                       {"delta2", sc.delta2}};
  recipe["dut"] = "dut.s2p";
  recipe["eps_eff_guess"] = eps0;
  recipe["uncertainty"] = {{"noise_std", sc.noise_std},
                           {"u_length", sc.u_length},
                           {"u_delta", sc.u_delta},
                           {"geometry", "geometry.json"}};
  auto rf = open_out(fs::path(out) / "recipe.json");
  rf << recipe.dump(1) << '\n';
  return 0;
}

int cmd_cov(const std::string& sweep_dir, const std::string& out) {
  if (!fs::is_directory(sweep_dir)) throw DataError("sweep directory not found: " + sweep_dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(sweep_dir))
    if (e.path().extension() == ".s2p") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw DataError("need at least 2 .s2p sweeps in " + sweep_dir);

  std::vector<utrl::network::TwoPortRecord> sweeps;
  for (const auto& f : files) sweeps.push_back(utrl::network::read_touchstone(f));
  utrl::network::SweepStatistics st = utrl::network::sample_covariance(sweeps);

  utrl::network::CovarianceSet cs;
  cs.standard_id = fs::path(sweep_dir).filename().string();
  cs.frequencies_hz = st.mean.frequencies_hz;
  cs.sigma_noise = st.sigma;
  cs.sample_count = st.sample_count;
  utrl::network::write_covariance_set(cs, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiline thru-reflect-line calibration with uncertainty propagation"};
  app.require_subcommand(1);

  std::string recipe_path, scenario_path, out = ".", sweep_dir;
  double eps_guess = 0.0, fail_threshold = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto add_common = [&](CLI::App* c, bool wants_recipe) {
    if (wants_recipe)
      c->add_option("--recipe", recipe_path, "calibration recipe (JSON)")->required();
    else
      c->add_option("--scenario", scenario_path, "Monte-Carlo scenario (JSON)")->required();
    c->add_option("--out", out, "output directory");
    return c;
  };

  auto* c_cal = add_common(app.add_subcommand("calibrate", "run the calibration"), true);
  c_cal->add_option("--eps-guess", eps_guess, "effective-permittivity guess override");
  c_cal->add_option("--fail-threshold", fail_threshold, "tolerated flagged-frequency fraction");

  auto* c_apply = add_common(app.add_subcommand("apply", "calibrate and de-embed the DUT"), true);
  c_apply->add_option("--eps-guess", eps_guess, "effective-permittivity guess override");
  c_apply->add_option("--fail-threshold", fail_threshold, "tolerated flagged-frequency fraction");

  auto* c_unc = add_common(app.add_subcommand("uncert", "propagate uncertainty, write budgets"), true);
  c_unc->add_option("--eps-guess", eps_guess, "effective-permittivity guess override");
  c_unc->add_option("--fail-threshold", fail_threshold, "tolerated flagged-frequency fraction");

  auto* c_mc = add_common(app.add_subcommand("mc", "Monte-Carlo run and comparison"), false);
  c_mc->add_option("--trials", trials, "trial count override");
  c_mc->add_option("--seed", seed, "RNG seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  c_mc->add_option("--threads", threads, "worker thread count");

  auto* c_synth = app.add_subcommand("synth", "synthesize a dataset");
  c_synth->add_option("--scenario", scenario_path,
                      "Monte-Carlo scenario (JSON); defaults to a built-in scenario");
  c_synth->add_option("--out", out, "output directory");

  auto* c_cov = app.add_subcommand("cov", "covariance from repeated sweeps");
  c_cov->add_option("sweep_dir", sweep_dir, "directory of repeated .s2p sweeps")->required();
  c_cov->add_option("--out", out, "output covariance file path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitData;
  }

  try {
    if (c_cal->parsed()) return cmd_calibrate(recipe_path, out, eps_guess, fail_threshold);
    if (c_apply->parsed()) return cmd_apply(recipe_path, out, eps_guess, fail_threshold);
    if (c_unc->parsed()) return cmd_uncert(recipe_path, out, eps_guess, fail_threshold);
    if (c_mc->parsed())
      return cmd_mc(scenario_path, out, trials,
                    seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, threads);
    if (c_synth->parsed()) return cmd_synth(scenario_path, out);
    if (c_cov->parsed())
      return cmd_cov(sweep_dir, out == "." ? "covariance.json" : out);
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const utrl::network::NetworkError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const utrl::mc::McError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
