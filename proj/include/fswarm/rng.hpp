#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fswarm {

/// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Stable 64-bit FNV-1a hash for scenario tags.
std::uint64_t hash_tag(std::string_view tag) noexcept;

/// Deterministic random stream. The engine output is fixed by the standard;
/// the distributions below are implemented here rather than taken from
/// <random> so that traces do not depend on the standard library vendor.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix_seed(seed)) {}

  /// Child stream keyed by (this stream's seed, tag). Does not advance this stream.
  [[nodiscard]] RngStream derive(std::uint64_t tag) const {
    return RngStream(mix_seed(seed_ ^ mix_seed(tag + 0x9E3779B97F4A7C15ULL)));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint8_t byte() { return static_cast<std::uint8_t>(engine_() >> 56); }

  /// Poisson(mean) by inversion; mean must be in [0, 700].
  std::uint64_t poisson(double mean);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace fswarm
