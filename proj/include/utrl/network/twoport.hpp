#pragma once

// Two-port data model and conversions.
//
// T-parameter convention: a matched line of length l maps to
// diag(e^{-gamma l}, e^{+gamma l}); equivalently for a two-port with
// S21 != 0:
//   T = 1/S21 * [ -det(S)  S11 ; -S22  1 ].

#include <stdexcept>
#include <string>
#include <vector>

#include "utrl/numkit/matrix.hpp"
#include "utrl/numkit/uncertain.hpp"

namespace utrl::network {

using numkit::Complex;
using numkit::Mat;

class NetworkError : public std::runtime_error {
 public:
  explicit NetworkError(const std::string& m) : std::runtime_error(m) {}
};

// Per-frequency 2x2 S-matrices for one standard or DUT, with optional raw
// wave matrices a', b' (receiver port x source port).
struct TwoPortRecord {
  std::vector<double> frequencies_hz;  // strictly increasing
  std::vector<Mat<Complex>> s;         // 2x2 per frequency
  std::vector<Mat<Complex>> wave_a;    // optional, empty or per frequency
  std::vector<Mat<Complex>> wave_b;
  double reference_ohm = 50.0;

  size_t size() const { return frequencies_hz.size(); }
  bool has_waves() const { return !wave_a.empty(); }

  void validate() const {
    if (s.size() != frequencies_hz.size())
      throw NetworkError("record: S data does not match frequency grid");
    for (size_t i = 1; i < frequencies_hz.size(); ++i)
      if (!(frequencies_hz[i] > frequencies_hz[i - 1]))
        throw NetworkError("record: frequencies not strictly increasing");
    for (const auto& m : s)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
            throw NetworkError("record: non-finite S entry");
  }
};

// S = b' * (a')^-1; switch-term-correct S-parameters from wave matrices.
template <class C>
Mat<C> s_from_waves(const Mat<C>& a, const Mat<C>& b) {
  if (std::abs(numkit::val(numkit::det(a))) < 1e-300)
    throw NetworkError("singular incident-wave matrix a'");
  return b * numkit::inverse(a);
}

template <class C>
Mat<C> s_to_t(const Mat<C>& s) {
  if (std::abs(numkit::val(s(1, 0))) < 1e-300)
    throw NetworkError("non-transmissive network: S21 = 0");
  C inv = C(1) / s(1, 0);
  Mat<C> t(2, 2);
  t(0, 0) = (s(0, 1) * s(1, 0) - s(0, 0) * s(1, 1)) * inv;  // -det(S)/S21
  t(0, 1) = s(0, 0) * inv;
  t(1, 0) = (C(0) - s(1, 1)) * inv;
  t(1, 1) = inv;
  return t;
}

template <class C>
Mat<C> t_to_s(const Mat<C>& t) {
  if (std::abs(numkit::val(t(1, 1))) < 1e-300)
    throw NetworkError("invalid T-matrix: T22 = 0");
  C inv = C(1) / t(1, 1);
  Mat<C> s(2, 2);
  s(0, 0) = t(0, 1) * inv;
  s(0, 1) = (t(0, 0) * t(1, 1) - t(0, 1) * t(1, 0)) * inv;  // det(T)/T22
  s(1, 0) = inv;
  s(1, 1) = (C(0) - t(1, 0)) * inv;
  return s;
}

// Canonical real-split ordering of a 2x2 complex matrix:
// [Re m11, Im m11, Re m21, Im m21, Re m12, Im m12, Re m22, Im m22]
// (column-stacked vec with Re/Im interleaved). Used by every 8x8 covariance
// block in the project ("vecRI").
inline Eigen::VectorXd vec_ri(const Mat<Complex>& m) {
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

inline Mat<Complex> from_vec_ri(const Eigen::VectorXd& v) {
  if (v.size() != 8) throw NetworkError("vecRI vector must have 8 entries");
  Mat<Complex> m(2, 2);
  int k = 0;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      m(i, j) = Complex(v(2 * k), v(2 * k + 1));
      ++k;
    }
  return m;
}

}  // namespace utrl::network
