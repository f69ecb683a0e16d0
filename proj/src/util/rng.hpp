#pragma once

// Deterministic random source. All randomness in the project flows through
// this type so that a (seed, structure) pair reproduces runs bit-exactly.
// Distribution transforms are written out by hand because the standard
// library does not pin theirs down.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace pidmrl::util {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0)
      : gen_(splitmix64(seed)),
        seed_hint_(splitmix64(seed ^ 0xa02bdbf7bb3c0a73ULL)) {}

  // Independent child stream; stable under unrelated draws from the parent.
  Rng split(std::uint64_t stream) const {
    return Rng(seed_hint_ ^ splitmix64(stream + 0x51ed27f3a1b2c4d5ULL));
  }

  double uniform() {  // [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; consumes draws in pairs, caches the spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_hint_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pidmrl::util
