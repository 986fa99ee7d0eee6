#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace aos {

/// Worker count used when a caller passes threads <= 0.
inline int default_thread_count() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Splits [begin, end) into contiguous chunks, one per worker, and calls
/// fn(chunk_begin, chunk_end) for each. Chunk boundaries depend only on the
/// range and the worker count; callers that write disjoint outputs per index
/// get results independent of scheduling. The first exception thrown by any
/// worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(int begin, int end, int threads, Fn&& fn) {
  const int n = end - begin;
  if (n <= 0) {
    return;
  }
  int workers = threads <= 0 ? default_thread_count() : threads;
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    fn(begin, end);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi = begin + static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, lo, hi, w] {
      try {
        fn(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

}  // namespace aos
