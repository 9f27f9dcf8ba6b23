#pragma once

#include <cstddef>
#include <functional>

namespace aedr {

/// Worker count: `requested` if positive, else $AEDR_WORKERS, else the
/// hardware concurrency; never more than `jobs` and never less than 1.
int resolve_workers(int requested, std::size_t jobs);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any job is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace aedr
