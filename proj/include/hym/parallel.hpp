#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace hym {

/// Worker count: HYMLAB_THREADS if set (minimum 1), else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("HYMLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Each worker
/// takes a contiguous index range, so per-index results written to
/// preallocated slots are deterministic regardless of the thread count.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace hym
