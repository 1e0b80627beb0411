#pragma once

#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lproj {

/// Runs f(i) for i in [0, n) over `threads` workers in contiguous chunks.
/// Callers write results into pre-sized slots indexed by i, so the output
/// is identical for any thread count. The first exception thrown by any
/// worker is rethrown on the calling thread.
inline void parallel_for(long n, int threads, const std::function<void(long)>& f) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  long workers = std::min<long>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  long chunk = (n + workers - 1) / workers;
  for (long w = 0; w < workers; ++w) {
    long lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &f, &error, &error_mutex] {
      try {
        for (long i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lproj
