#pragma once

#include <cstddef>
#include <functional>

namespace mvg4d {

/// Caps the worker count for all parallel loops. 0 restores the hardware
/// default. Changing the cap never changes numeric results, only speed.
void set_max_threads(int count);
int max_threads();

/// Runs fn(i) for i in [0, count). Work items must write to disjoint slots;
/// any cross-item reduction has to happen afterwards in index order so that
/// results are independent of the worker count. Calls must not nest.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace mvg4d
