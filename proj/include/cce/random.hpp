#pragma once

// Deterministic random streams.
//
// Generator: SplitMix64 (Steele, Lea & Flood 2014). State advances by the
// golden-gamma constant 0x9E3779B97F4A7C15 and each output is the finalizer
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
// applied to the new state.
//
// Stream derivation: the stream for (seed, index, attempt) starts from state
//   mix64(mix64(mix64(seed) ^ index) ^ attempt)
// where mix64 is the finalizer above applied to (x + golden gamma). Bootstrap
// replicate r uses index = r; a redrawn replicate increments attempt. Because
// the starting state depends only on these three integers, any replicate can
// be regenerated independently of execution order or thread placement.
//
// Conversions:
//   uniform01_open(): ((next() >> 11) + 0.5) * 2^-53, strictly inside (0,1)
//   below(n):         Lemire's multiply-shift with rejection, unbiased on [0,n)

#include <cstdint>

namespace cce {

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t z = x + kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  static constexpr SplitMix64 stream(std::uint64_t seed, std::uint64_t index,
                                     std::uint64_t attempt = 0) noexcept {
    return SplitMix64(mix64(mix64(mix64(seed) ^ index) ^ attempt));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~std::uint64_t{0}; }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr std::uint64_t next() noexcept {
    state_ += kGoldenGamma;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform01_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t state_;
};

}  // namespace cce
