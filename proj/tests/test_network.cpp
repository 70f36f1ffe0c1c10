#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>

#include "utrl/network/covariance_set.hpp"
#include "utrl/network/sample_covariance.hpp"
#include "utrl/network/touchstone.hpp"
#include "utrl/network/twoport.hpp"

using namespace utrl::network;
using utrl::numkit::Complex;
using utrl::numkit::Mat;

namespace {

Mat<Complex> random_s(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat<Complex> s(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s(i, j) = scale * Complex(nd(rng), nd(rng));
  return s;
}

std::string tmp_path(const std::string& name) {
  return std::string("/tmp/utrl_test_") + name;
}

}  // namespace

TEST_CASE("touchstone: minimal single-line file") {
  const std::string p = tmp_path("min.s2p");
  {
    std::ofstream f(p);
    f << "! comment\n# GHz S RI R 50\n1.0 0.1 0.2 0.9 -0.1 0.85 -0.15 0.05 0.02\n";
  }
  TwoPortRecord r = read_touchstone(p);
  REQUIRE(r.size() == 1);
  CHECK(r.frequencies_hz[0] == 1e9);
  CHECK(r.s[0](0, 0) == Complex(0.1, 0.2));
  CHECK(r.s[0](1, 0) == Complex(0.9, -0.1));
  CHECK(r.s[0](0, 1) == Complex(0.85, -0.15));
  CHECK(r.s[0](1, 1) == Complex(0.05, 0.02));
  CHECK(r.reference_ohm == 50.0);
}

TEST_CASE("touchstone: MA equals RI") {
  const std::string pri = tmp_path("fmt_ri.s2p"), pma = tmp_path("fmt_ma.s2p");
  const Complex z = std::polar(0.8, 0.6);
  {
    std::ofstream f(pri);
    f.precision(17);
    f << "# MHz S RI R 50\n100 " << z.real() << " " << z.imag()
      << " 0.5 0 0.5 0 0 0\n";
    std::ofstream g(pma);
    g.precision(17);
    g << "# MHz S MA R 50\n100 0.8 " << 0.6 * 180.0 / M_PI << " 0.5 0 0.5 0 0 0\n";
  }
  TwoPortRecord a = read_touchstone(pri), b = read_touchstone(pma);
  CHECK(std::abs(a.s[0](0, 0) - b.s[0](0, 0)) < 1e-12);
  CHECK(a.frequencies_hz[0] == 100e6);
}

TEST_CASE("touchstone: 150-point sweep round trip is stable") {
  std::mt19937_64 rng(61);
  TwoPortRecord rec;
  for (int i = 0; i < 150; ++i) {
    rec.frequencies_hz.push_back(1e9 * (i + 1));  // 1..150 GHz, 1 GHz step
    rec.s.push_back(random_s(rng));
  }
  const std::string p = tmp_path("sweep.s2p");
  write_touchstone(rec, p);
  TwoPortRecord back = read_touchstone(p);
  write_touchstone(back, p + "2");
  TwoPortRecord back2 = read_touchstone(p + "2");
  REQUIRE(back.size() == 150);
  for (size_t i = 0; i < 150; ++i) {
    CHECK(back.frequencies_hz[i] == rec.frequencies_hz[i]);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(back.s[i](r, c) - rec.s[i](r, c)) <= 1e-12 * std::abs(rec.s[i](r, c)));
        CHECK(back2.s[i](r, c) == back.s[i](r, c));  // bitwise stable after first trip
      }
  }
}

TEST_CASE("touchstone: malformed inputs") {
  const std::string p = tmp_path("bad.s2p");
  {
    std::ofstream f(p);
    f << "1.0 0.1 0.2 0.9 -0.1 0.85 -0.15 0.05 0.02\n";  // no header
  }
  CHECK_THROWS_AS(read_touchstone(p), NetworkError);
  {
    std::ofstream f(p);
    f << "# GHz S RI R 50\n1.0 0.1 0.2\n";  // wrong column count
  }
  CHECK_THROWS_AS(read_touchstone(p), NetworkError);
  {
    std::ofstream f(p);
    f << "# GHz S RI R 50\n2.0 0 0 1 0 1 0 0 0\n1.0 0 0 1 0 1 0 0 0\n";  // non-monotonic
  }
  CHECK_THROWS_AS(read_touchstone(p), NetworkError);
}

TEST_CASE("s_from_waves") {
  std::mt19937_64 rng(67);
  Mat<Complex> s0 = random_s(rng);
  Mat<Complex> eye = Mat<Complex>::identity(2);

  CHECK((s_from_waves(eye, s0) - s0).value_norm() < 1e-15);
  CHECK((s_from_waves(eye * Complex(2), s0 * Complex(2)) - s0).value_norm() < 1e-14);

  for (int trial = 0; trial < 10; ++trial) {
    Mat<Complex> a = random_s(rng);
    Mat<Complex> b = s0 * a;
    CHECK((s_from_waves(a, b) - s0).value_norm() < 1e-12 * s0.value_norm());
    // invariant under common right-multiplication
    Mat<Complex> m = random_s(rng);
    CHECK((s_from_waves(a * m, b * m) - s0).value_norm() < 1e-10 * s0.value_norm());
  }

  Mat<Complex> singular(2, 2);
  singular(0, 0) = Complex(1);
  CHECK_THROWS_AS(s_from_waves(singular, s0), NetworkError);
}

TEST_CASE("s/t conversions") {
  // thru
  Mat<Complex> thru(2, 2, {Complex(0), Complex(1), Complex(1), Complex(0)});
  CHECK((s_to_t(thru) - Mat<Complex>::identity(2)).value_norm() < 1e-15);

  // matched line maps to diag(exp(-gl), exp(+gl))
  Complex g(15.0, 800.0);
  double l = 0.001;
  Complex e = std::exp(-g * l);
  Mat<Complex> line(2, 2, {Complex(0), e, e, Complex(0)});
  Mat<Complex> t = s_to_t(line);
  CHECK(std::abs(t(0, 0) - e) < 1e-12 * std::abs(e));
  CHECK(std::abs(t(1, 1) - Complex(1) / e) < 1e-12 * std::abs(Complex(1) / e));
  CHECK(std::abs(t(0, 1)) < 1e-15);
  CHECK(std::abs(t(1, 0)) < 1e-15);

  // property: mutual inverses on random reciprocal and non-reciprocal S
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    Mat<Complex> s = random_s(rng);
    if (trial % 2 == 0) s(0, 1) = s(1, 0);  // reciprocal half the time
    if (std::abs(s(1, 0)) < 1e-3) continue;
    Mat<Complex> rt = t_to_s(s_to_t(s));
    CHECK((rt - s).value_norm() < 1e-12 * s.value_norm());
  }

  Mat<Complex> blocked(2, 2, {Complex(0.1), Complex(0.2), Complex(0), Complex(0.3)});
  CHECK_THROWS_AS(s_to_t(blocked), NetworkError);
}

TEST_CASE("sample covariance: zero variance and hand formula") {
  std::mt19937_64 rng(73);
  TwoPortRecord base;
  base.frequencies_hz = {1e9, 2e9};
  base.s = {random_s(rng), random_s(rng)};

  // identical sweeps -> zero covariance
  auto st = sample_covariance({base, base, base});
  CHECK(st.sigma[0].cwiseAbs().maxCoeff() < 1e-15);
  CHECK(st.sigma[1].cwiseAbs().maxCoeff() < 1e-15);

  // two sweeps differing by +-d in Re S11 -> variance 2 d^2
  const double d = 0.01;
  TwoPortRecord up = base, dn = base;
  up.s[0](0, 0) += d;
  dn.s[0](0, 0) -= d;
  auto st2 = sample_covariance({up, dn});
  CHECK(st2.sigma[0](0, 0) == Catch::Approx(2 * d * d));
  Eigen::MatrixXd rest = st2.sigma[0];
  rest(0, 0) = 0;
  CHECK(rest.cwiseAbs().maxCoeff() < 1e-18);
  CHECK((vec_ri(st2.mean.s[0]) - vec_ri(base.s[0])).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("sample covariance: 500 synthetic sweeps near truth") {
  std::mt19937_64 rng(79);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd a(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) a(i, j) = nd(rng);
  Eigen::MatrixXd truth = a * a.transpose() * 1e-4;
  Eigen::LLT<Eigen::MatrixXd> llt(truth);
  Eigen::MatrixXd L = llt.matrixL();

  TwoPortRecord base;
  base.frequencies_hz = {5e9};
  base.s = {random_s(rng)};

  std::vector<TwoPortRecord> sweeps;
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd xi(8);
    for (int k = 0; k < 8; ++k) xi(k) = nd(rng);
    TwoPortRecord r = base;
    r.s[0] = from_vec_ri(vec_ri(base.s[0]) + L * xi);
    sweeps.push_back(std::move(r));
  }
  auto st = sample_covariance(sweeps);
  const double scale = truth.diagonal().maxCoeff();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      CHECK(std::abs(st.sigma[0](i, j) - truth(i, j)) < 0.2 * scale);

  // permutation invariance
  std::vector<TwoPortRecord> shuffled = sweeps;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto st2 = sample_covariance(shuffled);
  CHECK((st.sigma[0] - st2.sigma[0]).cwiseAbs().maxCoeff() < 1e-12 * scale);
  CHECK(utrl::numkit::is_psd(st.sigma[0]));

  CHECK_THROWS_AS(sample_covariance({base}), NetworkError);
}

TEST_CASE("covariance set file round trip") {
  std::mt19937_64 rng(83);
  std::normal_distribution<double> nd(0.0, 1.0);
  CovarianceSet cs;
  cs.standard_id = "line_900um";
  cs.frequencies_hz = {1e9, 2e9, 3e9};
  cs.sample_count = 500;
  for (int f = 0; f < 3; ++f) {
    Eigen::MatrixXd a(8, 8);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) a(i, j) = nd(rng);
    cs.sigma_noise.push_back(a * a.transpose());
    cs.sigma_inverse.push_back(Eigen::MatrixXd::Identity(8, 8) * 1e-6);
  }
  const std::string p = tmp_path("cov.json");
  write_covariance_set(cs, p);
  CovarianceSet back = read_covariance_set(p);
  CHECK(back.standard_id == cs.standard_id);
  CHECK(back.sample_count == 500);
  REQUIRE(back.sigma_noise.size() == 3);
  for (int f = 0; f < 3; ++f) {
    CHECK((back.sigma_noise[f] - cs.sigma_noise[f]).cwiseAbs().maxCoeff() <
          1e-12 * cs.sigma_noise[f].cwiseAbs().maxCoeff());
    // Sigma_M = Sigma_N + Sigma_F + Sigma_I
    CHECK((back.total(f) - (cs.sigma_noise[f] + cs.sigma_inverse[f])).cwiseAbs().maxCoeff() <
          1e-12 * cs.sigma_noise[f].cwiseAbs().maxCoeff());
  }
}
