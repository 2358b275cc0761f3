#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dcam {

// Deterministic randomness for the whole toolkit.
//
// Every random decision (initialization, shuffling, augmentation, synthetic
// rendering, bootstrap resampling) is drawn from a SplitMix64 stream whose
// seed is derived from one root seed plus a namespace string and optional
// indices. The generator and the derivation are pinned here, bit for bit,
// so that any implementation of the same recipe reproduces identical runs:
//
//   mix64(x):   z = x + 0x9E3779B97F4A7C15
//               z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//               z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//               return z ^ (z >> 31)
//   fnv1a64(s): h = 0xCBF29CE484222325; per byte: h ^= byte; h *= 0x100000001B3
//
//   derive_seed(root, ns)       = mix64(root ^ fnv1a64(ns))
//   derive_seed(root, ns, i)    = mix64(derive_seed(root, ns) ^ mix64(i))
//   derive_seed(root, ns, i, j) = mix64(derive_seed(root, ns, i) ^ mix64(j))
//
// SplitMix64 itself (Steele, Lea & Flood) advances state by the golden-ratio
// increment and finalizes with mix64. Derived values:
//   next_double():   (next_u64() >> 11) * 2^-53            in [0, 1)
//   next_below(n):   high 64 bits of next_u64() * n        in [0, n)
//   next_gaussian(): Box-Muller on two uniforms, second value cached.

inline std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view ns) {
  return mix64(root ^ fnv1a64(ns));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view ns, std::uint64_t index) {
  return mix64(derive_seed(root, ns) ^ mix64(index));
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view ns, std::uint64_t i,
                                 std::uint64_t j) {
  return mix64(derive_seed(root, ns, i) ^ mix64(j));
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Multiply-shift reduction; the bias of
  /// at most bound/2^64 is far below anything observable here.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool next_bernoulli(double p) { return next_double() < p; }

  double next_gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_open_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

/// Fisher-Yates shuffle driven by SplitMix64. std::shuffle is not used
/// anywhere in the library because its output is implementation-defined.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dcam
