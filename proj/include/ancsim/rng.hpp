#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ancsim {

// Seeded generator with a fixed mapping from the mt19937_64 stream to
// doubles, so sequences are reproducible bit-for-bit for a given seed.
// (std::normal_distribution is implementation-defined; Box-Muller is not.)
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via the Box-Muller transform, one draw per call.
  double gaussian() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ancsim
