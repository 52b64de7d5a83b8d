// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace awm {

/// 64-bit FNV-1a. Used wherever a stable, platform-independent hash of
/// strings or byte blobs is needed (seeds, cache keys, config hashes).
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  // 64-bit mix of boost::hash_combine flavor.
  a ^= b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2);
  return a;
}

/// Deterministic PRNG (xoshiro256** core) with the handful of
/// distributions the project needs. Self-contained so that seeded runs
/// are reproducible bit-for-bit regardless of standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) {
    // splitmix64 expansion of the seed into the 4-word state
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull;
    for (auto& w : s_) {
      std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t v, int k) {
      return (v << k) | (v >> (64 - k));
    };
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

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::string state_string() const {
    std::string out;
    auto push_u64 = [&out](std::uint64_t w) {
      for (int i = 0; i < 8; ++i) out.push_back(char((w >> (8 * i)) & 0xff));
    };
    for (std::uint64_t w : s_) push_u64(w);
    out.push_back(have_spare_ ? 1 : 0);
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(spare_));
    std::memcpy(&bits, &spare_, 8);
    push_u64(bits);
    return out;
  }

  static Rng from_state(const std::string& state) {
    Rng r(0);
    auto read_u64 = [&state](std::size_t off) {
      std::uint64_t w = 0;
      for (int i = 0; i < 8; ++i)
        w |= std::uint64_t(static_cast<unsigned char>(state[off + i])) << (8 * i);
      return w;
    };
    if (state.size() >= 41) {
      for (int k = 0; k < 4; ++k) r.s_[k] = read_u64(8 * k);
      r.have_spare_ = state[32] != 0;
      const std::uint64_t bits = read_u64(33);
      std::memcpy(&r.spare_, &bits, 8);
    }
    return r;
  }

 private:
  std::uint64_t s_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace awm
