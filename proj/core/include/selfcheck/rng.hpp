#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

#include "selfcheck/error.hpp"

// Deterministic random numbers.
//
// Every random choice in this library flows through one fixed 64-bit
// generator: xoshiro256** (Blackman & Vigna), seeded through splitmix64.
// Distinct purposes (weight init, shuffling, pseudo-label tie-breaks, ...)
// draw from independent streams derived by hashing (seed, purpose-tag,
// indices...) with splitmix64, so adding a consumer never perturbs the
// streams of existing ones. All distributions are implemented here rather
// than taken from <random>, whose distributions are not bit-portable across
// standard libraries.

namespace selfcheck {

/// One splitmix64 step: updates `state` and returns the next 64-bit output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// FNV-1a over a byte string; used to fold purpose tags into stream seeds.
inline std::uint64_t hash_bytes(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// xoshiro256** generator with explicit, portable distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ull; }

  std::uint64_t operator()() { return next(); }

  /// Next raw 64-bit word.
  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, so exactly uniform.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw RejectedInput("uniform_int: n must be positive");
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  /// Standard normal via Box-Muller (no cached spare, so the stream position
  /// after a call does not depend on call history).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

/// Seed for the stream identified by (seed, tag, indices...). Streams with
/// different tags or indices are statistically independent.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = seed ^ hash_bytes(tag);
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index) {
  std::uint64_t h = derive_seed(seed, tag) ^ index;
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index_a, std::uint64_t index_b) {
  std::uint64_t h = derive_seed(seed, tag, index_a) ^ index_b;
  return splitmix64(h);
}

/// Stream generator for (seed, tag, indices...).
inline Rng derive_rng(std::uint64_t seed, std::string_view tag) {
  return Rng(derive_seed(seed, tag));
}

inline Rng derive_rng(std::uint64_t seed, std::string_view tag,
                      std::uint64_t index) {
  return Rng(derive_seed(seed, tag, index));
}

inline Rng derive_rng(std::uint64_t seed, std::string_view tag,
                      std::uint64_t index_a, std::uint64_t index_b) {
  return Rng(derive_seed(seed, tag, index_a, index_b));
}

}  // namespace selfcheck
