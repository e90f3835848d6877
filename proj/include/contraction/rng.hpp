#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace contraction {

/// Counter-based RNG: Philox4x64 with 10 rounds (Salmon et al., SC'11).
///
/// Keyed by (seed, stream). Streams with distinct keys are independent,
/// bit-reproducible, and need no shared state, so each worker can own one.
/// Draws are a pure function of (key, counter); copying the object forks
/// the sequence.
class PhiloxRng {
 public:
  using u64 = std::uint64_t;

  PhiloxRng(u64 seed, u64 stream) : key_{seed, stream} {}

  /// Raw Philox block function (one invocation of the 10-round bijection).
  static std::array<u64, 4> block(std::array<u64, 4> ctr, std::array<u64, 2> key) {
    constexpr u64 kMul0 = 0xD2E7470EE14C6C93ULL;
    constexpr u64 kMul1 = 0xCA5A826395121157ULL;
    constexpr u64 kWeyl0 = 0x9E3779B97F4A7C15ULL;
    constexpr u64 kWeyl1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
      const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
      const u64 hi0 = static_cast<u64>(p0 >> 64), lo0 = static_cast<u64>(p0);
      const u64 hi1 = static_cast<u64>(p1 >> 64), lo1 = static_cast<u64>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

  u64 next_u64() {
    if (buf_pos_ == 4) {
      buf_ = block(counter_, key_);
      buf_pos_ = 0;
      if (++counter_[0] == 0 && ++counter_[1] == 0 && ++counter_[2] == 0) ++counter_[3];
    }
    return buf_[buf_pos_++];
  }

  /// Uniform on (0, 1]; never returns 0 so log() stays finite.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform on [0, 1).
  double uniform_co() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; second variate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform_co();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::array<u64, 2> key_;
  std::array<u64, 4> counter_{0, 0, 0, 0};
  std::array<u64, 4> buf_{};
  int buf_pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; decent 64-bit mixing for stream-id derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Combines words into one stream id (order-sensitive).
inline std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return mix64(mix64(mix64(a) ^ b) ^ c);
}

/// FNV-1a over raw bytes; used for config/dataset fingerprints.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace contraction
