#pragma once

#include <cstddef>
#include <functional>

namespace bsgd {

/// Hardware concurrency, capped by the BSGD_THREADS environment variable when set.
std::size_t default_thread_count();

/// Calls task(i) for i in [0, n) on up to `threads` workers (0 means
/// default_thread_count()). Tasks must not share mutable state. If tasks throw,
/// the exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace bsgd
