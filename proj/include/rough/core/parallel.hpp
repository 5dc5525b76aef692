#pragma once

#include <cstddef>
#include <functional>

namespace rough {

/// Worker cap shared by the whole process. Defaults to ROUGH_YOUNG_THREADS
/// when set, else the hardware concurrency.
std::size_t thread_count() noexcept;
void set_thread_count(std::size_t n) noexcept;

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks; callers
/// write results by index so the outcome never depends on the schedule.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rough
