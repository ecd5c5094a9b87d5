#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ispinv {

/// Default worker count: ISPINV_THREADS if set and positive, otherwise the
/// hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("ISPINV_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over contiguous row bands of [0, rows). The band
/// layout never influences results: callers write to disjoint outputs.
/// The first exception thrown by any band is rethrown on the caller.
template <class Fn>
void parallel_rows(std::size_t rows, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_thread_count();
  const std::size_t workers = std::min<std::size_t>(threads, rows);
  if (workers <= 1) {
    fn(std::size_t{0}, rows);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = rows * w / workers;
    const std::size_t end = rows * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ispinv
