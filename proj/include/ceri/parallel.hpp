#ifndef CERI_PARALLEL_HPP
#define CERI_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ceri {

/// Worker count: hardware concurrency, capped by the CERI_THREADS variable.
inline int worker_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("CERI_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return n;
}

/// Calls fn(k) for k in [0, count). Callers write results by index, so the
/// outcome does not depend on scheduling. Rethrows the first exception.
template <typename Fn>
void parallel_for(long count, Fn&& fn) {
  const int workers = static_cast<int>(std::min<long>(worker_count(), count));
  if (workers <= 1) {
    for (long k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ceri

#endif  // CERI_PARALLEL_HPP
