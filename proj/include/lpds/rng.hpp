#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace lpds {

/// SplitMix64 finalizer. Used to turn (seed, stream index) pairs into
/// well-separated engine seeds so that replicate i always sees the same
/// random stream regardless of how replicates are scheduled.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Thin wrapper over mt19937_64 whose derived draws (uniforms, bounded
/// integers) are computed here rather than by <random> distributions, so
/// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Independent stream for replicate `index`; does not advance this engine.
  Rng child(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), bound > 0. Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = engine_();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = engine_();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Index of the cell drawn by inverse-cdf lookup; `cdf` must be
/// nondecreasing with last entry ~1.
inline std::size_t inverse_cdf_draw(std::span<const double> cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.end()) --it;
  return static_cast<std::size_t>(it - cdf.begin());
}

/// Multinomial cell counts of `n` inverse-cdf draws.
inline std::vector<std::int64_t> draw_counts(std::span<const double> cdf, std::int64_t n, Rng& rng) {
  std::vector<std::int64_t> counts(cdf.size(), 0);
  for (std::int64_t i = 0; i < n; ++i) ++counts[inverse_cdf_draw(cdf, rng.uniform() * cdf.back())];
  return counts;
}

}  // namespace lpds
