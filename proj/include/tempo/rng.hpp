#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "tempo/types.hpp"

namespace tempo {

// Deterministic random source.  std::mt19937_64 produces an identical bit
// stream everywhere, but the standard distributions do not, so the transforms
// are done by hand: uniforms via ldexp on the top 53 bits, normals via the
// Marsaglia polar method.  Same seed => same doubles on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() {
    return std::ldexp(static_cast<double>(engine_() >> 11), -53);
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Isotropic direction on the unit sphere in R^n.
  Vec unit_vector(int n) {
    Vec v(n);
    do {
      for (int i = 0; i < n; ++i) v[i] = normal();
    } while (v.norm() == 0.0);
    return v / v.norm();
  }

  // Uniform point in the closed ball of given radius about centre.
  Vec in_ball(const Vec& centre, double radius) {
    const int n = static_cast<int>(centre.size());
    const double r = radius * std::pow(uniform(), 1.0 / n);
    return centre + r * unit_vector(n);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tempo
