#pragma once

// Description of the calibration standards: line lengths (thru included),
// which standard is the thru, and the reflect estimate used to resolve the
// square-root sign during denormalization.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "utrl/numkit/uncertain.hpp"

namespace utrl::mtrl {

using numkit::Complex;

class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& m) : std::runtime_error(m) {}
};

struct LineSet {
  std::vector<double> lengths_m;  // physical lengths, thru included
  int thru_index = 0;
  Complex reflect_estimate{1.0, 0.0};  // e.g. ideal open = +1, ideal short = -1

  int size() const { return static_cast<int>(lengths_m.size()); }

  // Length referenced to the thru standard.
  double dl(int i) const { return lengths_m.at(static_cast<size_t>(i)) - lengths_m.at(static_cast<size_t>(thru_index)); }

  void validate() const {
    if (size() < 2) throw CalibrationError("line set needs at least 2 standards");
    if (thru_index < 0 || thru_index >= size())
      throw CalibrationError("thru index out of range");
    bool any = false;
    for (int i = 0; i < size(); ++i)
      if (std::abs(dl(i)) > 0.0) any = true;
    if (!any) throw CalibrationError("line set has no nonzero length difference");
  }
};

}  // namespace utrl::mtrl
