// Minimal deterministic parallel loop. HMFE_NUM_THREADS caps the thread count.
#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hmfe {

inline int max_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HMFE_NUM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(std::max(n, 1), cap);
  }
  return std::max(n, 1);
}

/// Runs body(i) for i in [0, n). Each index is handled by exactly one thread,
/// so writes to per-index slots are race free and results do not depend on
/// scheduling.
template <class Body>
void parallel_for(int n, Body&& body) {
  const int threads = std::min(max_threads(), std::max(n / 64, 1));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = t; i < n; i += threads) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hmfe
