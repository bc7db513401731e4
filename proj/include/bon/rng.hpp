#ifndef BON_RNG_HPP
#define BON_RNG_HPP

// Deterministic randomness for the simulator.
//
// One master seed derives independent named substreams ("walks", "trace", ...)
// so that adding draws to one part of the system never shifts another part's
// sequence. The generator is std::mt19937_64 (bit-exact by the standard); all
// sampling on top of it is implemented here rather than with std::*_distribution,
// whose algorithms are implementation-defined and would break byte-identical
// reruns across standard libraries.
//
// Draw discipline (tests rely on it):
//   - uniform_below(n) consumes mt19937_64 draws via Lemire rejection
//   - uniform_double() consumes exactly one draw
//   - poisson(nu) consumes a data-dependent number of uniform_double draws

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace bon {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class RandomSource {
 public:
  RandomSource() : engine_(0) {}
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  // Substream for a named purpose. Streams with different names are
  // decorrelated by two splitmix rounds over the hashed name.
  static RandomSource substream(std::uint64_t master_seed, std::string_view name) {
    return RandomSource(splitmix64(splitmix64(master_seed) ^ fnv1a64(name)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: empty range");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    return lo + static_cast<std::int64_t>(
                    uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Poisson by Knuth's product-of-uniforms method; large means split by
  // additivity so exp(-nu) never underflows.
  std::uint64_t poisson(double nu) {
    if (!(nu >= 0.0)) throw std::invalid_argument("poisson: mean must be >= 0");
    if (nu == 0.0) return 0;
    std::uint64_t total = 0;
    while (nu > 50.0) {
      total += poisson_small_(50.0);
      nu -= 50.0;
    }
    return total + poisson_small_(nu);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t poisson_small_(double nu) {
    const double limit = std::exp(-nu);
    std::uint64_t k = 0;
    double p = 1.0;
    for (;;) {
      p *= uniform_double();
      if (p <= limit) return k;
      ++k;
    }
  }

  std::mt19937_64 engine_;
};

}  // namespace bon

#endif  // BON_RNG_HPP
