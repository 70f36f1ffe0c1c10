#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <random>

#include "utrl/numkit/eig.hpp"
#include "utrl/numkit/takagi.hpp"
#include "utrl/numkit/uncertain.hpp"

using namespace utrl::numkit;

namespace {

Mat<Complex> rank2_outer(const Eigen::VectorXcd& z, const Eigen::VectorXcd& y) {
  const int n = static_cast<int>(z.size());
  Mat<Complex> t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) t(i, j) = z(i) * y(j) + y(i) * z(j);
  return t;
}

Mat<Complex> gg_t(const Mat<Complex>& g) {
  return g * g.transpose();
}

}  // namespace

TEST_CASE("takagi: exact rank-2 from line-model vectors") {
  Complex gamma(20.0, 2000.0);
  Eigen::Vector3d dl(0.0, 0.0005, 0.002);
  Eigen::VectorXcd y(3), z(3);
  for (int i = 0; i < 3; ++i) {
    y(i) = std::exp(gamma * dl(i));
    z(i) = std::exp(-gamma * dl(i));
  }
  Mat<Complex> t = rank2_outer(z, y);
  auto f = takagi_rank2(t);
  CHECK((gg_t(f.G) - t).value_norm() < 1e-10 * t.value_norm());
  CHECK(f.s3 < 1e-10 * f.s1);
}

TEST_CASE("takagi: diagonal real case") {
  Mat<Complex> t(2, 2, {Complex(2), Complex(0), Complex(0), Complex(1)});
  auto f = takagi_rank2(t);
  CHECK(f.s1 == Catch::Approx(2.0));
  CHECK(f.s2 == Catch::Approx(1.0));
  // G = diag(sqrt(2), 1) up to column phase
  CHECK(std::abs(f.G(0, 0)) == Catch::Approx(std::sqrt(2.0)));
  CHECK(std::abs(f.G(1, 1)) == Catch::Approx(1.0));
  CHECK(std::abs(f.G(1, 0)) < 1e-12);
  CHECK(std::abs(f.G(0, 1)) < 1e-12);
  CHECK((gg_t(f.G) - t).value_norm() < 1e-12);
}

TEST_CASE("takagi: random rank-2 constructive oracle") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int n : {2, 3, 4, 6}) {
    for (int trial = 0; trial < 10; ++trial) {
      Mat<Complex> a(n, 2);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) a(i, j) = Complex(nd(rng), nd(rng));
      Mat<Complex> t = a * a.transpose();
      auto f = takagi_rank2(t);
      CHECK((gg_t(f.G) - t).value_norm() < 1e-10 * t.value_norm());
      // G columns scaled to unit are orthonormal
      Mat<Complex> u(n, 2);
      for (int i = 0; i < n; ++i) {
        u(i, 0) = f.G(i, 0) / std::sqrt(f.s1);
        u(i, 1) = f.G(i, 1) / std::sqrt(f.s2);
      }
      CHECK((u.adjoint() * u - Mat<Complex>::identity(2)).value_norm() < 1e-10);
    }
  }
}

TEST_CASE("takagi: rank-2 truncation of noisy matrix matches SVD truncation") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat<Complex> a(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  Mat<Complex> t = a * a.transpose();
  // symmetric perturbation to raise the rank
  for (int i = 0; i < 5; ++i)
    for (int j = i; j < 5; ++j) {
      Complex e(1e-3 * nd(rng), 1e-3 * nd(rng));
      t(i, j) += e;
      t(j, i) = t(i, j);
    }
  auto f = takagi_rank2(t);
  // oracle: rank-2 truncation via Eigen's SVD of the same matrix
  Eigen::MatrixXcd te(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) te(i, j) = t(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(te, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXcd trunc = svd.singularValues()(0) * svd.matrixU().col(0) * svd.matrixV().col(0).adjoint() +
                           svd.singularValues()(1) * svd.matrixU().col(1) * svd.matrixV().col(1).adjoint();
  Mat<Complex> gg = gg_t(f.G);
  double err = 0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) err = std::max(err, std::abs(gg(i, j) - trunc(i, j)));
  CHECK(err < 1e-10 * f.s1);
  CHECK(f.s3 == Catch::Approx(svd.singularValues()(2)).margin(1e-12));
}

TEST_CASE("takagi: degenerate equal singular values") {
  // T = c * I2 is complex symmetric with s1 == s2
  Complex c = std::polar(3.0, 0.7);
  Mat<Complex> t(2, 2, {c, Complex(0), Complex(0), c});
  auto f = takagi_rank2(t);
  CHECK((gg_t(f.G) - t).value_norm() < 1e-10 * t.value_norm());
  CHECK(f.s1 == Catch::Approx(3.0));
  CHECK(f.s2 == Catch::Approx(3.0));
}

TEST_CASE("takagi: rank deficiency is an error") {
  Eigen::VectorXcd z(3);
  z << Complex(1, 0.2), Complex(0.4, 1), Complex(0, 1);
  Mat<Complex> t = rank2_outer(z, z);  // y parallel to z -> rank 1
  CHECK_THROWS_AS(takagi_rank2(t), TakagiError);
}

TEST_CASE("takagi: asymmetric input rejected") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat<Complex> t(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = Complex(nd(rng), nd(rng));
  CHECK_THROWS_AS(takagi_rank2(t), TakagiError);
}

TEST_CASE("takagi: antisymmetry of G J2 G^T is exact") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat<Complex> a(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = Complex(nd(rng), nd(rng));
  auto f = takagi_rank2(a * a.transpose());
  Mat<Complex> j2(2, 2, {Complex(0), Complex(0, 1), Complex(0, -1), Complex(0)});
  Mat<Complex> w = f.G * j2 * f.G.transpose();
  CHECK((w + w.transpose()).value_norm() < 1e-14 * w.value_norm());
}

TEST_CASE("eig_pm_lambda: diagonal case") {
  Mat<Complex> f(4, 4);
  f(0, 0) = Complex(-5);
  f(3, 3) = Complex(5);
  auto e = eig_pm_lambda(f);
  CHECK(std::abs(e.lambda - Complex(5)) < 1e-12);
  // x1 ~ e1, x4 ~ e4
  CHECK(std::abs(e.x1(0, 0)) > 1e-6);
  CHECK(std::abs(e.x1(1, 0)) + std::abs(e.x1(2, 0)) + std::abs(e.x1(3, 0)) < 1e-10 * std::abs(e.x1(0, 0)));
  CHECK(std::abs(e.x4(3, 0)) > 1e-6);
  CHECK(std::abs(e.x4(0, 0)) + std::abs(e.x4(1, 0)) + std::abs(e.x4(2, 0)) < 1e-10 * std::abs(e.x4(3, 0)));
}

TEST_CASE("eig_pm_lambda: similarity-transformed constructive oracle") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Complex lambda(2.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Mat<Complex> x(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) x(i, j) = Complex(nd(rng), nd(rng));
    Mat<Complex> d(4, 4);
    d(0, 0) = -lambda;
    d(3, 3) = lambda;
    Mat<Complex> f = x * d * inverse(x);
    auto e = eig_pm_lambda(f);
    CHECK(std::abs(e.lambda - lambda) < 1e-10 * std::abs(lambda));
    // x1 parallel to X col 1, x4 parallel to X col 4
    auto parallel = [](const Mat<Complex>& a, const Mat<Complex>& b) {
      Complex num = 0, na = 0, nb = 0;
      for (int i = 0; i < a.rows(); ++i) {
        num += std::conj(a(i, 0)) * b(i, 0);
        na += std::conj(a(i, 0)) * a(i, 0);
        nb += std::conj(b(i, 0)) * b(i, 0);
      }
      return std::abs(num) / std::sqrt(std::abs(na * nb));
    };
    CHECK(parallel(e.x1, x.col(0)) == Catch::Approx(1.0).epsilon(1e-8));
    CHECK(parallel(e.x4, x.col(3)) == Catch::Approx(1.0).epsilon(1e-8));
    // residuals
    Mat<Complex> r1 = f * e.x1 + e.x1 * e.lambda;
    Mat<Complex> r4 = f * e.x4 - e.x4 * e.lambda;
    CHECK(r1.value_norm() < 1e-8 * f.value_norm() * e.x1.value_norm());
    CHECK(r4.value_norm() < 1e-8 * f.value_norm() * e.x4.value_norm());
  }
}

TEST_CASE("eig_pm_lambda: projector ranks are one") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat<Complex> x(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) x(i, j) = Complex(nd(rng), nd(rng));
  Mat<Complex> d(4, 4);
  const Complex lambda(1.5, -0.5);
  d(0, 0) = -lambda;
  d(3, 3) = lambda;
  Mat<Complex> f = x * d * inverse(x);
  auto e = eig_pm_lambda(f);
  Mat<Complex> pp = f * (f + Mat<Complex>::identity(4) * e.lambda);
  Eigen::MatrixXcd pe(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) pe(i, j) = pp(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pe);
  CHECK(svd.singularValues()(1) <= 1e-8 * svd.singularValues()(0));
}

TEST_CASE("eig_pm_lambda: zero lambda flagged") {
  Mat<Complex> f(4, 4);  // all zeros
  CHECK_THROWS_AS(eig_pm_lambda(f), EigError);
}
