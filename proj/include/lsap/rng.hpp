#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "lsap/array.hpp"

namespace lsap {

// All randomness in the toolkit flows through the generators below so that
// every draw is reproducible from a 64-bit seed, independent of platform,
// thread count, and standard-library version. std::mt19937 and
// std::normal_distribution are deliberately avoided: their outputs are not
// pinned across implementations.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a 64-bit hash, used for sample ids and purpose tags.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// xoshiro256++ (Blackman & Vigna), seeded via splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
    have_spare_ = false;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller; caches the sine partner.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] so log is finite.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Array gaussian_array(std::vector<std::size_t> shape) {
    Array out = Array::zeros(std::move(shape));
    for (auto& v : out.data) v = gaussian();
    return out;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_;
};

/// Deterministic per-(sample, timestep, purpose) seed derivation.
/// seed = chain of splitmix64 steps over master ^ fnv(sample_id) ^ t ^ fnv(tag) ^ salt,
/// so the same inputs give the same stream on every platform and in any
/// worker order.
struct SeedPolicy {
  std::uint64_t master = 0;

  std::uint64_t derive(std::string_view sample_id, std::uint64_t t,
                       std::string_view tag, std::uint64_t salt = 0) const {
    std::uint64_t s = master;
    s = mix(s, fnv1a64(sample_id));
    s = mix(s, t);
    s = mix(s, fnv1a64(tag));
    s = mix(s, salt);
    return s;
  }

  Rng rng(std::string_view sample_id, std::uint64_t t, std::string_view tag,
          std::uint64_t salt = 0) const {
    return Rng(derive(sample_id, t, tag, salt));
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a ^ b;
    return splitmix64(s);
  }
};

}  // namespace lsap
