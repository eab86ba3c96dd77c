#pragma once

#include <cstddef>
#include <functional>

namespace polygene {

/// Worker count: POLYGENE_THREADS if set, else the hardware concurrency.
int thread_count();

/// Run body(i) for i in [0, n) on up to thread_count() threads. Exceptions
/// from any task are rethrown (the first one) after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace polygene
