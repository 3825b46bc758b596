#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace curio {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream); used to keep training, holdout and planner
/// randomness apart.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// `count` values from [lo, hi], one per equal-width stratum, ascending.
inline std::vector<double> stratified_uniform(Rng& rng, double lo, double hi, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  const double w = (hi - lo) / count;
  for (int i = 0; i < count; ++i) out.push_back(lo + (i + uniform01(rng)) * w);
  return out;
}

}  // namespace curio
