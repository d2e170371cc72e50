#pragma once
// Deterministic worker-pool parallelism.
//
// Tasks are split into static contiguous chunks; each task writes only its
// own preallocated slot, and any reduction happens in a fixed order after the
// barrier.  Results are therefore identical for every thread count.

#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace zsync {

inline void parallel_for(int64_t n, int threads, const std::function<void(int64_t)>& fn) {
  if (n <= 0) return;
  if (threads < 1) threads = 1;
  if (threads == 1 || n == 1) {
    for (int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  int64_t t = std::min<int64_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::exception_ptr first_error = nullptr;
  std::mutex err_mu;
  for (int64_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w]() {
      int64_t begin = w * n / t;
      int64_t end = (w + 1) * n / t;
      try {
        for (int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace zsync
