#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hsid {

// All randomness in the project goes through these generators so that every
// stream is reproducible bit-for-bit across compilers and platforms (the
// standard <random> distributions are implementation-defined).
//
// Uniforms come from SplitMix64 (Steele, Lea & Flood 2014). A stream is
// identified by a 64-bit key derived from a user seed plus stream labels, so
// independent substreams (one per band, per parameter block, per epoch) can
// be generated in any order. Normals use the Box-Muller transform on pairs of
// uniforms, consuming both outputs.

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a substream key from a seed and a sequence of labels.
inline constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  std::uint64_t k = splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL);
  k = splitmix64_mix(k ^ (a + 0x632be59bd9b4e019ULL));
  k = splitmix64_mix(k ^ (b + 0x85157af5ULL));
  return k;
}

// Stream labels used with derive_key.
enum class Stream : std::uint64_t {
  NoiseBand = 1,
  SigmaProfile = 2,
  InitBlock = 3,
  ShuffleEpoch = 4,
  AugmentNoise = 5,
};

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t key) noexcept : state_(key) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_closed() noexcept { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = bound ? (~std::uint64_t{0} - (~std::uint64_t{0} % bound)) : 0;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % bound;
  }

 private:
  std::uint64_t state_;
};

/// Standard normal deviates via Box-Muller on a SplitMix64 stream.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t key) noexcept : uniform_(key) {}

  double next() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_.uniform_open_closed();
    const double u2 = uniform_.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  SplitMix64 uniform_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t key) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  SplitMix64 rng(key);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace hsid
