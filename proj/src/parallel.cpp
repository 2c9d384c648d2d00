#include "parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace protes {

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("PROTES_THREADS")) {
    try {
      int n = std::stoi(env);
      return std::max(1, n);
    } catch (const std::exception&) {
      return hw;
    }
  }
  return hw;
}

void parallel_for_ranges(std::int64_t n,
                         const std::function<void(std::int64_t, std::int64_t)>& body,
                         int workers) {
  if (n <= 0) return;
  if (workers <= 0) workers = worker_count();
  workers = static_cast<int>(std::min<std::int64_t>(workers, n));
  if (workers == 1) {
    body(0, n);
    return;
  }

  std::mutex err_mutex;
  std::exception_ptr first_error;
  const std::int64_t chunk = (n + workers - 1) / workers;

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = static_cast<std::int64_t>(w) * chunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body,
                  int workers) {
  parallel_for_ranges(
      n,
      [&body](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) body(i);
      },
      workers);
}

}  // namespace protes
