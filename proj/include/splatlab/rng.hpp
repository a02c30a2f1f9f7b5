#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace splatlab {

// Seeded scalar draws on top of std::mt19937_64. The transformations from
// raw engine words to doubles are implemented here rather than with <random>
// distribution objects, whose output streams are implementation-defined; this
// keeps every seeded artifact reproducible for a given engine stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1), 53 mantissa bits, one engine word.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; always consumes exactly two engine words
  // (the sine branch is discarded so calls stay aligned).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * M_PI * u2);
  }

  // Unbiased integer in [0, bound) by rejection; bound must be >= 1.
  std::uint64_t integer(std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (max % bound + 1) % bound;  // 2^64 mod bound
    std::uint64_t x = gen_();
    while (rem != 0 && x > max - rem) x = gen_();
    return x % bound;
  }

  // Isotropic unit direction: three normals, normalized (redrawn in the
  // astronomically unlikely near-zero case).
  Eigen::Vector3d unit_vector() {
    while (true) {
      Eigen::Vector3d v(normal(), normal(), normal());
      const double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  // Uniform rotation as a unit quaternion (w, x, y, z), canonicalized to
  // w >= 0; four normals, normalized.
  Eigen::Vector4d unit_quaternion() {
    while (true) {
      Eigen::Vector4d q(normal(), normal(), normal(), normal());
      const double n = q.norm();
      if (n > 1e-12) {
        q /= n;
        if (q[0] < 0.0) q = -q;
        return q;
      }
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace splatlab
