#pragma once

#include <cstddef>
#include <functional>

namespace lhopt::harness {

/// Worker count from LHOPT_WORKERS, else the hardware concurrency (at least 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; callers write results into slot i so output order does not
/// depend on scheduling. The first exception thrown is rethrown after all
/// workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = worker_count());

} // namespace lhopt::harness
