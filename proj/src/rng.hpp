#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lodbox::detail {

/// mt19937_64 with hand-rolled transforms; std::distributions are
/// implementation-defined, these outputs are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return eng_(); }
  int uniform_int(int n) {  // [0, n)
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }

  double normal() {  // Box-Muller, one value per draw pair
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * u2);
  }

  /// Knuth's product method chunked so exp(-lambda) stays representable.
  long poisson(double lambda) {
    long total = 0;
    while (lambda > 0.0) {
      double chunk = std::min(lambda, 500.0);
      double limit = std::exp(-chunk);
      double prod = uniform();
      long k = 0;
      while (prod > limit) {
        prod *= uniform();
        ++k;
      }
      total += k;
      lambda -= chunk;
    }
    return total;
  }

 private:
  std::mt19937_64 eng_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt + 0x9e3779b97f4a7c15ULL);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace lodbox::detail
