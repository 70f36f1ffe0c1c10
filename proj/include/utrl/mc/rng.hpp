#pragma once

// Deterministic, splittable random streams for the Monte-Carlo harness.
// Generator: SplitMix64 (Steele/Lea/Flood mixing constants). Streams are
// keyed by (seed, trial, source, index) through repeated finalizer mixing,
// so every trial and every uncertainty source draws from its own
// independent, reproducible stream regardless of execution order or thread
// count. Gaussian variates come from the Box-Muller transform; both steps
// are fully specified, so results are bit-identical across platforms.

#include <cmath>
#include <cstdint>

namespace utrl::mc {

struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t s) : state(s) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in the open interval (0, 1): 53 mantissa bits, offset by half an
  // ulp so neither endpoint is reachable
  double uniform01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
};

namespace detail {
inline std::uint64_t mix_in(std::uint64_t h, std::uint64_t v) {
  SplitMix64 g(h ^ (v + 0x9E3779B97F4A7C15ULL));
  return g.next();
}
}  // namespace detail

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t trial, std::uint64_t source,
                                std::uint64_t index = 0) {
  std::uint64_t h = detail::mix_in(seed, 0x5851F42D4C957F2DULL);
  h = detail::mix_in(h, trial);
  h = detail::mix_in(h, source);
  h = detail::mix_in(h, index);
  return h;
}

// Standard-normal stream via Box-Muller; the sine partner of each pair is
// cached so consecutive draws use both halves.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t key) : gen_(key) {}

  double next() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = gen_.uniform01();
    const double u2 = gen_.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    cached_ = r * std::sin(th);
    have_ = true;
    return r * std::cos(th);
  }

 private:
  SplitMix64 gen_;
  double cached_ = 0.0;
  bool have_ = false;
};

}  // namespace utrl::mc
