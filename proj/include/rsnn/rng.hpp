#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rsnn {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Child stream seeds are derived, never reused: train/val/test splits, per-epoch
// shuffles and per-step noise all get their own stream index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master + 0x9E3779B97F4A7C15ull * (stream + 1));
}

// Deterministic across platforms: mt19937_64 is fully specified by the standard
// and all variates below are built from raw 64-bit draws (std::*_distribution is
// implementation-defined and must not be used here).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on the open interval (0,1); never returns an endpoint, so the
  // logistic inverse stays finite.
  double uniform_open01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open01(); }

  // Uniform integer in [0, n). Rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller; the paired variate is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform_open01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  // Standard normal rejection-sampled to |x| <= cut.
  double truncated_normal_unit(double cut = 2.0) {
    double x;
    do {
      x = normal();
    } while (std::fabs(x) > cut);
    return x;
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Standard deviation of the standard normal truncated to [-2, 2]. Samples are
// divided by this so the realized std matches the requested one.
inline constexpr double kTruncNormal2Std = 0.8796256610342398;

}  // namespace rsnn
