#pragma once

#include <cstdint>
#include <string_view>

namespace topobench {

/// SplitMix64 output function.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a. Stable across platforms and processes.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: draw i is splitmix64(seed + i * golden_gamma).
/// Any draw can be recomputed from (seed, i) alone, so streams are identical
/// across platforms, compilers and thread schedules.
__extension__ using u128 = unsigned __int128;

class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  constexpr std::uint64_t next() { return splitmix64(seed_ + kGamma * ++counter_); }

  /// Uniform integer in [0, n). Multiply-high reduction; n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<u128>(next()) * n) >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// Deterministic uniform in [0,1) keyed by an arbitrary label.
inline double keyed_uniform(std::uint64_t seed, std::string_view key) {
  return CounterRng(splitmix64(seed) ^ fnv1a64(key)).uniform();
}

}  // namespace topobench
