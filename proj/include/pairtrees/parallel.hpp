#pragma once

#include <functional>

namespace pairtrees {

// Effective worker count: `requested` if positive, then the PAIRTREES_THREADS
// environment variable, then hardware concurrency.
int resolve_threads(int requested);

// Runs fn(0..n-1) across up to n_threads workers. Work items must be
// independent; results are deterministic regardless of the worker count.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace pairtrees
