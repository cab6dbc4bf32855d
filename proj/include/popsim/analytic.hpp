#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>

namespace popsim {

// Harmonic number H_k = sum_{i=1..k} 1/i, accumulated smallest-term-first.
inline double harmonic(std::size_t k) {
  double h = 0.0;
  for (std::size_t i = k; i >= 1; --i) {
    h += 1.0 / static_cast<double>(i);
  }
  return h;
}

// Expected number of interactions until a one-way epidemic started by a
// single infected agent covers all n agents: (n-1) * H_{n-1}.
inline double expected_epidemic_interactions(std::size_t n) {
  if (n < 2) {
    throw std::invalid_argument("expected_epidemic_interactions: n must be >= 2");
  }
  return static_cast<double>(n - 1) * harmonic(n - 1);
}

inline double expected_epidemic_parallel_time(std::size_t n) {
  return expected_epidemic_interactions(n) / static_cast<double>(n);
}

// Expected leader counters (cq, ca) at the moment half of the population
// has been infected: (H_{n/2}, H_{n-1} - H_{n/2-1}). The second component
// converges to ln 2. Exact for even n.
inline std::pair<double, double> expected_pse_counters_at_half(std::size_t n) {
  if (n < 4) {
    throw std::invalid_argument("expected_pse_counters_at_half: n must be >= 4");
  }
  const std::size_t half = n / 2;
  return {harmonic(half), harmonic(n - 1) - harmonic(half - 1)};
}

}  // namespace popsim
