#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace chainladder {

/// Thread count for @p requested: positive values are taken as is, 0 means
/// CHAINLADDER_THREADS if set, else the hardware concurrency.
int resolve_threads(int requested);

/// Calls fn(i) for i in [begin, end) over @p threads workers with a static
/// partition. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t begin, std::size_t end, int threads, const std::function<void(std::size_t)>& fn);

/// Independent generator for stream @p index of a run seeded with @p seed.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace chainladder
