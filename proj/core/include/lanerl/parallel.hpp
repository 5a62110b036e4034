#pragma once

#include <cstddef>
#include <functional>

namespace lanerl {

/// Number of chunks used by parallel_ranges for large inputs.
int parallel_width();

/// Runs fn(begin, end) over a fixed even partition of [0, n). The partition
/// depends only on n and the configured width, never on scheduling, and each
/// chunk writes disjoint outputs, so results are bit-reproducible. Falls back
/// to a single inline call when the estimated work (in flops) is too small to
/// amortize a thread spawn.
void parallel_ranges(std::size_t n, double flops_estimate,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace lanerl
