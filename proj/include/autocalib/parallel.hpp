#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace autocalib {

/// Worker count: min(hardware, AUTOCALIB_THREADS). Never less than 1.
inline unsigned thread_budget() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("AUTOCALIB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
  }
  return n;
}

/// Runs fn(i) for i in [0, count). Work items must be independent; callers
/// merge results deterministically afterwards.
inline void parallel_for(size_t count, const std::function<void(size_t)>& fn) {
  const unsigned workers = thread_budget();
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<size_t>(workers, count));
  pool.reserve(n);
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace autocalib
