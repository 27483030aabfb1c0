#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "fmer/types.hpp"

namespace fmer {

/// Worker count: FMER_THREADS when set, hardware concurrency otherwise.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("FMER_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) return static_cast<unsigned>(parsed);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs fn(0..count-1) across workers. Tasks must write to disjoint state;
/// results are deterministic as long as each task is seeded by its index.
inline void parallel_for(Index count, const std::function<void(Index)>& fn) {
  const unsigned workers =
      std::min<unsigned>(default_thread_count(),
                         static_cast<unsigned>(std::max<Index>(count, 1)));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      for (Index i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fmer
