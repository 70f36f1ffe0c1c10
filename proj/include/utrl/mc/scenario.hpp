#pragma once

// Monte-Carlo scenario description: fixed error boxes, the line cross
// section with its parameter uncertainties, line lengths, reflect model and
// noise levels, plus trial count and seed. Serializable as JSON so runs are
// reproducible from a single file.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "utrl/cpw/model.hpp"
#include "utrl/mtrl/lineset.hpp"
#include "utrl/numkit/matrix.hpp"

namespace utrl::mc {

using numkit::Complex;
using numkit::Mat;

class McError : public std::runtime_error {
 public:
  explicit McError(const std::string& m) : std::runtime_error(m) {}
};

struct McScenario {
  std::vector<double> freqs_hz;

  // fixed error boxes as T-matrices plus the scalar seventh term
  Mat<Complex> box_a{2, 2};
  Mat<Complex> box_b{2, 2};
  Complex k_scale{1.0, 0.0};

  cpw::CpwGeometry geometry;  // shared cross section with uncertainties
  std::vector<double> lengths_m;
  int thru_index = 0;
  double u_length = 40e-6;  // per-line length std, meters

  Complex reflect_gamma{-0.98, 0.0};     // true reflection coefficient
  Complex reflect_estimate{-1.0, 0.0};   // estimate handed to the calibration
  double delta1 = 0.0, delta2 = 0.0;     // known reflect offsets per port
  double u_delta = 40e-6;                // per-port asymmetry std, meters

  double noise_std = 1e-4;  // per real/imaginary component, every standard

  Mat<Complex> dut_s{2, 2};  // true DUT S-parameters

  int trials = 1000;
  std::uint64_t seed = 1;

  mtrl::LineSet line_set() const {
    mtrl::LineSet ls;
    ls.lengths_m = lengths_m;
    ls.thru_index = thru_index;
    ls.reflect_estimate = reflect_estimate;
    return ls;
  }

  void validate() const {
    if (freqs_hz.empty()) throw McError("scenario has no frequency grid");
    for (double f : freqs_hz)
      if (!(f > 0.0)) throw McError("scenario frequencies must be positive");
    if (trials < 2) throw McError("scenario needs at least 2 trials");
    if (u_length < 0.0 || u_delta < 0.0 || noise_std < 0.0)
      throw McError("scenario uncertainties must be nonnegative");
    geometry.validate();
    line_set().validate();
    if (std::abs(numkit::det(box_a)) < 1e-12 || std::abs(numkit::det(box_b)) < 1e-12)
      throw McError("scenario error boxes must be invertible");
    if (std::abs(k_scale) < 1e-12) throw McError("scenario k must be nonzero");
  }
};

namespace detail {

inline nlohmann::json cplx_json(const Complex& c) { return {c.real(), c.imag()}; }

inline Complex cplx_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw McError("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json mat2_json(const Mat<Complex>& m) {
  return {{cplx_json(m(0, 0)), cplx_json(m(0, 1))}, {cplx_json(m(1, 0)), cplx_json(m(1, 1))}};
}

inline Mat<Complex> mat2_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw McError("matrix value must be 2x2");
  Mat<Complex> m(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int c = 0; c < 2; ++c)
      m(i, c) = cplx_from(j[static_cast<size_t>(i)][static_cast<size_t>(c)]);
  return m;
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const McScenario& sc) {
  nlohmann::json j;
  j["frequencies_hz"] = sc.freqs_hz;
  j["box_a"] = detail::mat2_json(sc.box_a);
  j["box_b"] = detail::mat2_json(sc.box_b);
  j["k"] = detail::cplx_json(sc.k_scale);
  j["geometry"] = cpw::geometry_to_json(sc.geometry);
  j["lengths_m"] = sc.lengths_m;
  j["thru_index"] = sc.thru_index;
  j["u_length"] = sc.u_length;
  j["reflect_gamma"] = detail::cplx_json(sc.reflect_gamma);
  j["reflect_estimate"] = detail::cplx_json(sc.reflect_estimate);
  j["delta1"] = sc.delta1;
  j["delta2"] = sc.delta2;
  j["u_delta"] = sc.u_delta;
  j["noise_std"] = sc.noise_std;
  j["dut_s"] = detail::mat2_json(sc.dut_s);
  j["trials"] = sc.trials;
  j["seed"] = sc.seed;
  return j;
}

inline McScenario scenario_from_json(const nlohmann::json& j) {
  McScenario sc;
  sc.freqs_hz = j.at("frequencies_hz").get<std::vector<double>>();
  sc.box_a = detail::mat2_from(j.at("box_a"));
  sc.box_b = detail::mat2_from(j.at("box_b"));
  sc.k_scale = detail::cplx_from(j.at("k"));
  sc.geometry = cpw::geometry_from_json(j.at("geometry"));
  sc.lengths_m = j.at("lengths_m").get<std::vector<double>>();
  sc.thru_index = j.at("thru_index").get<int>();
  sc.u_length = j.value("u_length", 40e-6);
  sc.reflect_gamma = detail::cplx_from(j.at("reflect_gamma"));
  sc.reflect_estimate = detail::cplx_from(j.at("reflect_estimate"));
  sc.delta1 = j.value("delta1", 0.0);
  sc.delta2 = j.value("delta2", 0.0);
  sc.u_delta = j.value("u_delta", 40e-6);
  sc.noise_std = j.value("noise_std", 0.0);
  sc.dut_s = detail::mat2_from(j.at("dut_s"));
  sc.trials = j.value("trials", 1000);
  sc.seed = j.value("seed", std::uint64_t{1});
  sc.validate();
  return sc;
}

inline void write_scenario(const McScenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw McError("cannot write scenario file: " + path);
  out << scenario_to_json(sc).dump(1) << '\n';
}

inline McScenario read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw McError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw McError("malformed scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

// Demonstration scenario: 30-point 1-60 GHz grid, the table cross section,
// the standard length set, a symmetric lossless DUT with equal reflection
// and transmission magnitudes 1/sqrt(2).
inline McScenario default_scenario() {
  McScenario sc;
  const int np = 30;
  for (int i = 0; i < np; ++i)
    sc.freqs_hz.push_back(1e9 + (60e9 - 1e9) * i / (np - 1));
  sc.box_a = Mat<Complex>(2, 2, {Complex(0.9, -0.2), Complex(0.15, 0.05),
                                 Complex(-0.1, 0.08), Complex(1.1, 0.1)});
  sc.box_b = Mat<Complex>(2, 2, {Complex(1.05, 0.15), Complex(-0.12, 0.06),
                                 Complex(0.07, -0.1), Complex(0.95, -0.12)});
  sc.k_scale = Complex(1.3, -0.4);
  sc.geometry = cpw::default_geometry();
  sc.lengths_m = {200e-6, 450e-6, 900e-6, 1800e-6, 3500e-6, 5250e-6};
  sc.thru_index = 0;
  const double r = 1.0 / std::sqrt(2.0);
  sc.dut_s = Mat<Complex>(2, 2, {Complex(r, 0.0), Complex(0.0, r), Complex(0.0, r),
                                 Complex(r, 0.0)});
  return sc;
}

}  // namespace utrl::mc
