#pragma once

// Complete elliptic integral of the first kind, K(m) with parameter m = k^2,
// evaluated by the arithmetic-geometric mean: K(m) = pi / (2 agm(1, sqrt(1-m))).

#include <cmath>
#include <stdexcept>
#include <string>

namespace utrl::cpw {

class CpwError : public std::runtime_error {
 public:
  explicit CpwError(const std::string& m) : std::runtime_error(m) {}
};

inline double ellipk(double m) {
  if (!(m >= 0.0 && m < 1.0)) throw CpwError("ellipk: parameter must be in [0, 1)");
  double a = 1.0;
  double b = std::sqrt(1.0 - m);
  for (int i = 0; i < 60 && std::abs(a - b) > 1e-17 * a; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return M_PI / (2.0 * a);
}

}  // namespace utrl::cpw
