#ifndef RSM_PARALLEL_HPP
#define RSM_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace rsm {

/// Worker count from RSM_THREADS; 0 or unset means hardware concurrency.
inline std::size_t threads_from_env() {
  const char* raw = std::getenv("RSM_THREADS");
  std::size_t n = 0;
  if (raw != nullptr && *raw != '\0') {
    try {
      n = static_cast<std::size_t>(std::stoul(raw));
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n == 0)
    n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Calls fn(i) for every i in [0, count). Each index is handled by exactly one
/// worker, so writes to per-index slots need no synchronization. The first
/// exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < count; i += threads)
            fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

} // namespace rsm

#endif // RSM_PARALLEL_HPP
