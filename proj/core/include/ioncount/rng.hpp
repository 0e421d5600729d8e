#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Deterministic random streams. Everything downstream of a master seed is
// derived through named child streams so that serial and parallel execution
// over sites produce identical results, and so that output files are
// byte-identical across runs and platforms (no std::<distribution> use).

namespace ioncount {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// xoshiro256** seeded via splitmix64.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Child stream for a named stage and index. Derivation depends only on the
  // construction seed, never on how many draws the parent has made.
  RandomStream child(std::string_view tag, std::uint64_t index = 0) const {
    std::uint64_t sm = seed_ ^ fnv1a64(tag);
    std::uint64_t a = splitmix64(sm);
    sm = a + index * 0x9E3779B97F4A7C15ULL;
    return RandomStream(splitmix64(sm));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in (0, 1].
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  double normal(double mean, double sigma) {
    // Box-Muller without spare caching: the draw sequence stays a pure
    // function of the call sequence.
    const double u1 = uniform();
    const double u2 = uniform();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // Knuth multiplication method; fine for the lambdas used here (<~50).
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  int binomial(int n, double p) {
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (uniform() <= p) ++k;
    return k;
  }

  bool bernoulli(double p) { return uniform() <= p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_ = 0;
  std::uint64_t s_[4]{};
};

}  // namespace ioncount
