#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace qhrl {

/// Engine used for every stochastic routine. Each replication owns one.
using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits of one engine output, so
/// the value depends only on the engine state and not on the standard library.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF lookup: first index whose cumulative mass exceeds u. Falls back
/// to the last index with positive mass when rounding leaves cdf.back() <= u.
/// The count below equals that index for a nondecreasing cdf and avoids a
/// data-dependent branch per entry.
inline std::size_t sample_from_cdf(std::span<const double> cdf, double u) {
  std::size_t below = 0;
  for (double c : cdf) below += static_cast<std::size_t>(u >= c);
  if (below < cdf.size()) return below;
  std::size_t last = cdf.size() - 1;
  while (last > 0 && cdf[last] == cdf[last - 1]) --last;
  return last;
}

}  // namespace qhrl
