#pragma once

// Quasi-TEM coplanar-waveguide cross-section model on a thick lossless
// substrate: conformal-mapping capacitance with a finite-thickness metal
// correction and a skin-effect conductor loss term. Deliberately smooth in
// every input; derivatives are taken by central finite differences.

#include <cmath>
#include <complex>
#include <fstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "utrl/cpw/ellipk.hpp"

namespace utrl::cpw {

using Complex = std::complex<double>;

inline constexpr double kC0 = 299792458.0;
inline constexpr double kMu0 = 4.0e-7 * M_PI;

struct CpwGeometry {
  double w = 49.1e-6;        // signal width
  double ground = 273.3e-6;  // ground-plane width
  double s = 25.5e-6;        // gap
  double t = 4.9e-6;         // conductor thickness
  double eps_r = 9.9;
  double sigma = 4.11e7;  // conductor conductivity, S/m

  // standard uncertainties, same order
  double u_w = 0.0, u_ground = 0.0, u_s = 0.0, u_t = 0.0, u_eps_r = 0.0, u_sigma = 0.0;

  double param(int i) const {
    const double p[6] = {w, ground, s, t, eps_r, sigma};
    return p[i];
  }
  double uncertainty(int i) const {
    const double u[6] = {u_w, u_ground, u_s, u_t, u_eps_r, u_sigma};
    return u[i];
  }
  void set_param(int i, double v) {
    double* p[6] = {&w, &ground, &s, &t, &eps_r, &sigma};
    *p[i] = v;
  }

  void validate() const {
    if (!(w > 0 && ground > 0 && s > 0 && t > 0 && eps_r >= 1.0 && sigma > 0))
      throw CpwError("invalid CPW geometry: all dimensions must be positive, eps_r >= 1");
    for (int i = 0; i < 6; ++i)
      if (uncertainty(i) < 0.0) throw CpwError("negative parameter uncertainty");
  }
};

struct CpwResult {
  Complex gamma;   // 1/m
  Complex z0;      // ohm
  double eps_eff;  // relative effective permittivity
  double loss_db;  // dB per meter
};

inline CpwResult cpw_model(const CpwGeometry& g, double f_hz) {
  g.validate();
  if (!(f_hz > 0.0)) throw CpwError("frequency must be positive");

  // thickness-corrected effective slot: the metal edges bulge by
  // d = 1.25 t/pi (1 + ln(4 pi w / t)), which vanishes with t
  const double d = 1.25 * g.t / M_PI * (1.0 + std::log(4.0 * M_PI * g.w / g.t));
  const double a = 0.5 * g.w + 0.5 * d;
  const double b = 0.5 * g.w + g.s - 0.5 * d;
  if (!(b > a)) throw CpwError("thickness correction closes the gap");
  const double c = 0.5 * g.w + g.s + g.ground;

  const double k1 = (a / b) * std::sqrt((1.0 - b * b / (c * c)) / (1.0 - a * a / (c * c)));
  const double kk = ellipk(k1 * k1);
  const double kkp = ellipk(1.0 - k1 * k1);
  const double ratio = kk / kkp;

  // infinitely thick substrate: dielectric filling factor 1/2, pulled toward
  // air by the finite metal thickness
  const double eps0_eff = 0.5 * (g.eps_r + 1.0);
  const double th = 0.7 * g.t / g.s;
  const double eps_eff = eps0_eff - (eps0_eff - 1.0) * th / (ratio + th);

  const double z0_quasi = 30.0 * M_PI / (std::sqrt(eps_eff) * ratio);

  const double beta = 2.0 * M_PI * f_hz / kC0 * std::sqrt(eps_eff);
  // skin-effect conductor loss: surface resistance spread over the strip
  const double rs = std::sqrt(M_PI * f_hz * kMu0 / g.sigma);
  const double alpha = rs * (1.0 + g.w / (g.w + 2.0 * g.s)) / (2.0 * z0_quasi * g.w);

  CpwResult out;
  out.eps_eff = eps_eff;
  out.gamma = Complex(alpha, beta);
  out.z0 = z0_quasi * Complex(1.0, -alpha / (2.0 * beta));  // low-loss correction
  out.loss_db = 20.0 / std::log(10.0) * alpha;
  if (!std::isfinite(out.eps_eff) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw CpwError("CPW model produced a non-finite output");
  return out;
}

// 4x6 Jacobian of (Re gamma, Im gamma, Re Z0, Im Z0) with respect to the six
// geometry/material parameters, by central differences.
inline Eigen::MatrixXd cpw_jacobian(const CpwGeometry& g, double f_hz,
                                    double rel_step = 1e-6) {
  Eigen::MatrixXd j(4, 6);
  for (int p = 0; p < 6; ++p) {
    const double x = g.param(p);
    const double h = std::max(rel_step * std::abs(x), 1e-12);
    CpwGeometry gp = g, gm = g;
    gp.set_param(p, x + h);
    gm.set_param(p, x - h);
    CpwResult rp = cpw_model(gp, f_hz);
    CpwResult rm = cpw_model(gm, f_hz);
    j(0, p) = (rp.gamma.real() - rm.gamma.real()) / (2.0 * h);
    j(1, p) = (rp.gamma.imag() - rm.gamma.imag()) / (2.0 * h);
    j(2, p) = (rp.z0.real() - rm.z0.real()) / (2.0 * h);
    j(3, p) = (rp.z0.imag() - rm.z0.imag()) / (2.0 * h);
  }
  return j;
}

// Joint covariance of (Re G, Im G, Re gamma, Im gamma) where G is the
// reflection coefficient of the line's impedance perturbation against the
// nominal impedance: at the match, dG/dZ = 1/(2 mu_Z).
inline Eigen::MatrixXd sigma_gamma_z(const CpwGeometry& g, double f_hz) {
  Eigen::MatrixXd j = cpw_jacobian(g, f_hz);
  const Complex z0 = cpw_model(g, f_hz).z0;
  Eigen::MatrixXd jg(4, 6);
  for (int p = 0; p < 6; ++p) {
    const Complex dz(j(2, p), j(3, p));
    const Complex dgam = dz / (2.0 * z0);
    jg(0, p) = dgam.real();
    jg(1, p) = dgam.imag();
    jg(2, p) = j(0, p);
    jg(3, p) = j(1, p);
  }
  Eigen::VectorXd u2(6);
  for (int p = 0; p < 6; ++p) u2(p) = g.uncertainty(p) * g.uncertainty(p);
  Eigen::MatrixXd s = jg * u2.asDiagonal() * jg.transpose();
  return 0.5 * (s + s.transpose());
}

// Geometry as a JSON object, SI units.
inline nlohmann::json geometry_to_json(const CpwGeometry& g) {
  nlohmann::json j;
  j["w"] = g.w;
  j["ground"] = g.ground;
  j["s"] = g.s;
  j["t"] = g.t;
  j["eps_r"] = g.eps_r;
  j["sigma"] = g.sigma;
  j["u_w"] = g.u_w;
  j["u_ground"] = g.u_ground;
  j["u_s"] = g.u_s;
  j["u_t"] = g.u_t;
  j["u_eps_r"] = g.u_eps_r;
  j["u_sigma"] = g.u_sigma;
  return j;
}

inline void write_geometry(const CpwGeometry& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CpwError("cannot write geometry file: " + path);
  out << geometry_to_json(g).dump(1) << '\n';
}

inline CpwGeometry geometry_from_json(const nlohmann::json& j) {
  CpwGeometry g;
  g.w = j.at("w").get<double>();
  g.ground = j.at("ground").get<double>();
  g.s = j.at("s").get<double>();
  g.t = j.at("t").get<double>();
  g.eps_r = j.at("eps_r").get<double>();
  g.sigma = j.at("sigma").get<double>();
  g.u_w = j.value("u_w", 0.0);
  g.u_ground = j.value("u_ground", 0.0);
  g.u_s = j.value("u_s", 0.0);
  g.u_t = j.value("u_t", 0.0);
  g.u_eps_r = j.value("u_eps_r", 0.0);
  g.u_sigma = j.value("u_sigma", 0.0);
  g.validate();
  return g;
}

inline CpwGeometry read_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CpwError("cannot open geometry file: " + path);
  nlohmann::json j;
  in >> j;
  return geometry_from_json(j);
}

// Table-style default with the demonstration uncertainties.
inline CpwGeometry default_geometry() {
  CpwGeometry g;
  g.u_w = 2.55e-6;
  g.u_ground = 2.55e-6;
  g.u_s = 2.55e-6;
  g.u_t = 0.49e-6;
  g.u_eps_r = 0.2;
  g.u_sigma = 0.41e7;
  return g;
}

}  // namespace utrl::cpw
