#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fairmdp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent generator for (seed, index), e.g. one per trajectory or episode.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index drawn proportionally to nonnegative weights. Requires a positive total.
std::size_t sample_categorical(Rng& rng, std::span<const double> weights);

/// Standard normal deviate (Box-Muller on uniform01, so streams are portable).
double standard_normal(Rng& rng);

}  // namespace fairmdp
