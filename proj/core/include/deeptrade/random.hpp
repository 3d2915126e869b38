#pragma once

#include <cstdint>
#include <random>

namespace deeptrade {

/// Seeded PRNG stream. All draws are derived from raw mt19937_64 output so
/// that sequences are reproducible independently of the standard library's
/// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * n);
    return v < n ? v : n - 1;
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace deeptrade
