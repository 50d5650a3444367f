#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace taskpart {

/// Resolves a requested worker count: 0 means auto (hardware concurrency,
/// at least 1). Callers that honor the TASKPART_THREADS environment variable
/// resolve it before calling into the library.
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Reads the TASKPART_THREADS environment variable; 0 or unset means auto.
inline unsigned workers_from_env() {
  const char* raw = std::getenv("TASKPART_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  long value = std::strtol(raw, nullptr, 10);
  return value > 0 ? static_cast<unsigned>(value) : 0;
}

/// Runs fn(i) for i in [0, n) across up to `workers` threads. Tasks must
/// write only to their own slot of any shared output so the merged result is
/// independent of scheduling. Exceptions propagate after all threads join.
template <typename Fn>
void parallel_for_indexed(std::size_t n, unsigned workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  pool.reserve(used);
  for (unsigned w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace taskpart
