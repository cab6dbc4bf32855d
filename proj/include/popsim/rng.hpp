#pragma once

#include <cassert>
#include <cstdint>
#include <limits>
#include <random>

namespace popsim {

// One splitmix64 scrambling step. Used for deriving per-replicate seeds
// from a base seed; stable across platforms and releases.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded generator with a reproducibility contract: the same seed yields
// the same draw sequence on every platform. mt19937_64 output is fully
// specified by the standard, and bounded draws below use rejection
// sampling instead of std::uniform_int_distribution (whose mapping is
// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, bound), bound >= 1. Unbiased.
  std::uint64_t below(std::uint64_t bound) {
    assert(bound >= 1);
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = max % bound;
    if (rem == bound - 1) {
      return engine_() % bound;  // bound divides 2^64
    }
    const std::uint64_t cutoff = max - rem;  // largest multiple of bound
    std::uint64_t v = engine_();
    while (v >= cutoff) {
      v = engine_();
    }
    return v % bound;
  }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    assert(lo <= hi);
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(below(span));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace popsim
