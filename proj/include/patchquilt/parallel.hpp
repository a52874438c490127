#pragma once
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace patchquilt {

/// Worker-pool cap for all parallel stages. 0 = hardware concurrency.
/// The CLI sets this from --threads / PATCHQUILT_THREADS.
void set_thread_count(int threads);
int thread_count();

/// Runs fn(i) for i in [0,n). Work is split into contiguous chunks, one per
/// worker; outputs must go to disjoint slots so results are deterministic.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace patchquilt
