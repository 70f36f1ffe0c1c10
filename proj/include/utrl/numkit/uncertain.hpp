#pragma once

// Forward-mode uncertainty engine over a global registry of real inputs.
//
// Every UReal/UComplex carries its value together with a dense row of
// sensitivities with respect to the registry's global real input vector r.
// Complex gradients are stored as a single complex row g, where
// g[k] = d(Re v)/dr[k] + j * d(Im v)/dr[k].
//
// An empty gradient row means "constant" (zero sensitivity to everything);
// it broadcasts against any registry dimension.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace utrl::numkit {

using Complex = std::complex<double>;

class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void align_dims(Eigen::Index a, Eigen::Index b) {
  if (a != 0 && b != 0 && a != b)
    throw EngineError("gradient dimension mismatch: " + std::to_string(a) +
                      " vs " + std::to_string(b));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// UReal
// ---------------------------------------------------------------------------

struct UReal {
  double v = 0.0;
  Eigen::RowVectorXd g;  // empty == constant

  UReal() = default;
  UReal(double value) : v(value) {}  // NOLINT: implicit by design
  UReal(double value, Eigen::RowVectorXd grad) : v(value), g(std::move(grad)) {}

  Eigen::Index dim() const { return g.size(); }
};

inline double val(double x) { return x; }
inline double val(const UReal& x) { return x.v; }

namespace detail {

// Combine two gradient rows as alpha*ga + beta*gb, honoring empty rows.
inline Eigen::RowVectorXd lincomb(double alpha, const Eigen::RowVectorXd& ga,
                                  double beta, const Eigen::RowVectorXd& gb) {
  align_dims(ga.size(), gb.size());
  if (ga.size() == 0 && gb.size() == 0) return {};
  if (ga.size() == 0) return beta * gb;
  if (gb.size() == 0) return alpha * ga;
  return alpha * ga + beta * gb;
}

inline Eigen::RowVectorXcd lincomb(Complex alpha, const Eigen::RowVectorXcd& ga,
                                   Complex beta, const Eigen::RowVectorXcd& gb) {
  align_dims(ga.size(), gb.size());
  if (ga.size() == 0 && gb.size() == 0) return {};
  if (ga.size() == 0) return beta * gb;
  if (gb.size() == 0) return alpha * ga;
  return alpha * ga + beta * gb;
}

}  // namespace detail

inline UReal operator+(const UReal& a, const UReal& b) {
  return {a.v + b.v, detail::lincomb(1.0, a.g, 1.0, b.g)};
}
inline UReal operator-(const UReal& a, const UReal& b) {
  return {a.v - b.v, detail::lincomb(1.0, a.g, -1.0, b.g)};
}
inline UReal operator-(const UReal& a) { return {-a.v, a.g.size() ? Eigen::RowVectorXd(-a.g) : Eigen::RowVectorXd{}}; }
inline UReal operator*(const UReal& a, const UReal& b) {
  return {a.v * b.v, detail::lincomb(b.v, a.g, a.v, b.g)};
}
inline UReal operator/(const UReal& a, const UReal& b) {
  if (std::abs(b.v) < 1e-300) throw EngineError("division by (near) zero");
  const double inv = 1.0 / b.v;
  return {a.v * inv, detail::lincomb(inv, a.g, -a.v * inv * inv, b.g)};
}

inline bool operator<(const UReal& a, const UReal& b) { return a.v < b.v; }
inline bool operator>(const UReal& a, const UReal& b) { return a.v > b.v; }

inline UReal sqrt(const UReal& a) {
  const double s = std::sqrt(a.v);
  if (s == 0.0) {
    if (a.g.size() && a.g.cwiseAbs().maxCoeff() != 0.0)
      throw EngineError("sqrt at zero with nonzero sensitivity");
    return {0.0};
  }
  return {s, detail::lincomb(0.5 / s, a.g, 0.0, {})};
}
inline UReal exp(const UReal& a) {
  const double e = std::exp(a.v);
  return {e, detail::lincomb(e, a.g, 0.0, {})};
}
inline UReal log(const UReal& a) {
  if (a.v <= 0.0) throw EngineError("log of non-positive value");
  return {std::log(a.v), detail::lincomb(1.0 / a.v, a.g, 0.0, {})};
}
inline UReal abs(const UReal& a) {
  if (a.v == 0.0) return {0.0};
  const double s = a.v > 0.0 ? 1.0 : -1.0;
  return {std::abs(a.v), detail::lincomb(s, a.g, 0.0, {})};
}
inline UReal sin(const UReal& a) { return {std::sin(a.v), detail::lincomb(std::cos(a.v), a.g, 0.0, {})}; }
inline UReal cos(const UReal& a) { return {std::cos(a.v), detail::lincomb(-std::sin(a.v), a.g, 0.0, {})}; }

// atan2 with the usual quadrant conventions; smooth away from the origin.
inline UReal atan2(const UReal& y, const UReal& x) {
  const double d = x.v * x.v + y.v * y.v;
  if (d < 1e-300) throw EngineError("atan2 at origin");
  return {std::atan2(y.v, x.v), detail::lincomb(x.v / d, y.g, -y.v / d, x.g)};
}

// ---------------------------------------------------------------------------
// UComplex
// ---------------------------------------------------------------------------

struct UComplex {
  Complex v{0.0, 0.0};
  Eigen::RowVectorXcd g;  // g[k] = dRe/dr_k + j dIm/dr_k

  UComplex() = default;
  UComplex(double re) : v(re) {}                 // NOLINT
  UComplex(const Complex& value) : v(value) {}   // NOLINT
  UComplex(Complex value, Eigen::RowVectorXcd grad) : v(value), g(std::move(grad)) {}
  UComplex(const UReal& re, const UReal& im = UReal{}) : v(re.v, im.v) {
    detail::align_dims(re.g.size(), im.g.size());
    const Eigen::Index n = std::max(re.g.size(), im.g.size());
    if (n > 0) {
      g = Eigen::RowVectorXcd::Zero(n);
      if (re.g.size()) g += re.g.cast<Complex>();
      if (im.g.size()) g += Complex(0, 1) * im.g.cast<Complex>();
    }
  }

  Eigen::Index dim() const { return g.size(); }
};

inline Complex val(const Complex& z) { return z; }
inline Complex val(const UComplex& z) { return z.v; }

inline UComplex operator+(const UComplex& a, const UComplex& b) {
  return {a.v + b.v, detail::lincomb(Complex(1), a.g, Complex(1), b.g)};
}
inline UComplex operator-(const UComplex& a, const UComplex& b) {
  return {a.v - b.v, detail::lincomb(Complex(1), a.g, Complex(-1), b.g)};
}
inline UComplex operator-(const UComplex& a) {
  return {-a.v, a.g.size() ? Eigen::RowVectorXcd(-a.g) : Eigen::RowVectorXcd{}};
}
inline UComplex operator*(const UComplex& a, const UComplex& b) {
  return {a.v * b.v, detail::lincomb(b.v, a.g, a.v, b.g)};
}
inline UComplex operator/(const UComplex& a, const UComplex& b) {
  if (std::abs(b.v) < 1e-300) throw EngineError("complex division by (near) zero");
  const Complex inv = Complex(1) / b.v;
  return {a.v * inv, detail::lincomb(inv, a.g, -a.v * inv * inv, b.g)};
}

inline UComplex conj(const UComplex& a) {
  return {std::conj(a.v), a.g.size() ? Eigen::RowVectorXcd(a.g.conjugate()) : Eigen::RowVectorXcd{}};
}
inline UComplex exp(const UComplex& a) {
  const Complex e = std::exp(a.v);
  return {e, detail::lincomb(e, a.g, Complex(0), {})};
}
// Principal branch; callers keep arguments away from the cut.
inline UComplex log(const UComplex& a) {
  if (std::abs(a.v) < 1e-300) throw EngineError("complex log at zero");
  return {std::log(a.v), detail::lincomb(Complex(1) / a.v, a.g, Complex(0), {})};
}
// Principal branch.
inline UComplex sqrt(const UComplex& a) {
  const Complex s = std::sqrt(a.v);
  if (std::abs(s) < 1e-300) {
    if (a.g.size() && a.g.cwiseAbs().maxCoeff() != 0.0)
      throw EngineError("complex sqrt at zero with nonzero sensitivity");
    return {Complex(0)};
  }
  return {s, detail::lincomb(Complex(0.5) / s, a.g, Complex(0), {})};
}

inline UReal real(const UComplex& a) {
  return {a.v.real(), a.g.size() ? Eigen::RowVectorXd(a.g.real()) : Eigen::RowVectorXd{}};
}
inline UReal imag(const UComplex& a) {
  return {a.v.imag(), a.g.size() ? Eigen::RowVectorXd(a.g.imag()) : Eigen::RowVectorXd{}};
}
inline UReal abs(const UComplex& a) {
  const double m = std::abs(a.v);
  if (m == 0.0) {
    if (a.g.size() && a.g.cwiseAbs().maxCoeff() != 0.0)
      throw EngineError("abs at zero with nonzero sensitivity");
    return {0.0};
  }
  // d|z| = Re(conj(z) dz)/|z|
  if (a.g.size() == 0) return {m};
  Eigen::RowVectorXd gr = (std::conj(a.v) * a.g).real() / m;
  return {m, std::move(gr)};
}
inline UReal arg(const UComplex& a) { return atan2(imag(a), real(a)); }
inline UReal norm2(const UComplex& a) {  // |z|^2
  return real(a) * real(a) + imag(a) * imag(a);
}

// Scalar-type bridge used by generic (templated) numeric code.
template <class C>
struct scalar_traits;

template <>
struct scalar_traits<Complex> {
  using real_type = double;
  using complex_type = Complex;
  static Complex from(const Complex& z) { return z; }
  static Complex make(double re, double im) { return {re, im}; }
};

template <>
struct scalar_traits<UComplex> {
  using real_type = UReal;
  using complex_type = UComplex;
  static UComplex from(const Complex& z) { return UComplex(z); }
  static UComplex make(const UReal& re, const UReal& im) { return {re, im}; }
};

// ---------------------------------------------------------------------------
// InputRegistry
// ---------------------------------------------------------------------------

// Bookkeeping for the global real input vector r: each registered source owns
// a contiguous slice of r, with a mean vector and a symmetric PSD covariance
// block. Sources at different frequencies are independent; a registry is
// rebuilt per frequency point. Append-only during setup, frozen before
// propagation.
class InputRegistry {
 public:
  struct Source {
    int id;
    std::string label;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    int offset;
  };

  int register_input(const std::string& label, const Eigen::VectorXd& mean,
                     const Eigen::MatrixXd& cov) {
    if (frozen_) throw EngineError("registry is frozen");
    if (mean.size() == 0) throw EngineError("zero-dimensional input '" + label + "'");
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
      throw EngineError("covariance dimensions do not match mean for '" + label + "'");
    for (const auto& s : sources_)
      if (s.label == label) throw EngineError("duplicate source label '" + label + "'");
    Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
    if ((cov - sym).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw EngineError("covariance for '" + label + "' is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale)
      throw EngineError("covariance for '" + label + "' is not positive semidefinite");
    const int id = static_cast<int>(sources_.size());
    sources_.push_back({id, label, mean, sym, dim_});
    dim_ += static_cast<int>(mean.size());
    return id;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  int dim() const { return dim_; }
  int source_count() const { return static_cast<int>(sources_.size()); }
  const Source& source(int id) const { return sources_.at(static_cast<size_t>(id)); }

  // One component of a registered source as an input variable: its gradient
  // is the unit basis row of its slot.
  UReal variable(int source_id, int component) const {
    const Source& s = source(source_id);
    if (component < 0 || component >= s.mean.size())
      throw EngineError("component out of range for '" + s.label + "'");
    Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(dim_);
    g(s.offset + component) = 1.0;
    return {s.mean(component), std::move(g)};
  }

  // Complex variable from two consecutive components (Re, Im interleaved).
  UComplex cvariable(int source_id, int pair_index) const {
    return {variable(source_id, 2 * pair_index), variable(source_id, 2 * pair_index + 1)};
  }

  // Block-diagonal global input covariance.
  Eigen::MatrixXd covariance() const {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& s : sources_)
      sigma.block(s.offset, s.offset, s.mean.size(), s.mean.size()) = s.cov;
    return sigma;
  }

 private:
  std::vector<Source> sources_;
  int dim_ = 0;
  bool frozen_ = false;
};

}  // namespace utrl::numkit
