#pragma once

#include <cstddef>
#include <functional>

namespace nce {

/// Worker count: NCE_THREADS when set to a positive integer, otherwise hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for every i in [0, n), handing out indices dynamically.
/// If any call throws, the exception raised at the smallest i is rethrown,
/// so error reporting does not depend on the worker count. Calls made from
/// inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace nce
