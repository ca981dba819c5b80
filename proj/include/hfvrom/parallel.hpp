#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hfvrom {

/// Worker cap shared by the offline assembly loops; 0 means hardware concurrency.
inline unsigned& worker_limit() {
  static unsigned limit = 0;
  return limit;
}

inline unsigned worker_count() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return worker_limit() == 0 ? hw : std::min(worker_limit(), hw);
}

/// Runs body(i) for i in [0, n) over contiguous blocks. Each index is handled
/// by exactly one worker, so results written per index are deterministic.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hfvrom
