#pragma once

// Static-chunked parallel loop. Each index is handled by exactly one worker,
// so results written per index do not depend on scheduling.

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tenkit {

template <typename F>
void parallel_for(long n, int threads, F&& f) {
  if (threads <= 1 || n < 2) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  const long workers = std::min<long>(threads, n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long i = w * n / workers; i < (w + 1) * n / workers; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace tenkit
