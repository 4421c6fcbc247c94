#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace vpme {

// Number of worker threads: hardware concurrency, optionally capped by the
// VPME_THREADS environment variable. Evaluated once per process.
inline unsigned thread_budget() {
  static const unsigned budget = [] {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("VPME_THREADS")) {
      long cap = std::strtol(env, nullptr, 10);
      if (cap >= 1 && static_cast<unsigned long>(cap) < hw)
        hw = static_cast<unsigned>(cap);
    }
    return hw;
  }();
  return budget;
}

// Runs fn(i) for i in [0, n), split into contiguous chunks across threads.
// Each index is visited exactly once by exactly one thread, so loops whose
// iterations write to disjoint locations produce results independent of the
// thread count (bitwise, since the per-index work is unchanged).
// n_threads == 0 means "use thread_budget()".
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t grain = 4096,
                  unsigned n_threads = 0) {
  std::size_t nt = n_threads ? n_threads : thread_budget();
  if (nt > 1 && n > grain) nt = std::min<std::size_t>(nt, (n + grain - 1) / grain);
  if (nt <= 1 || n <= grain) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + nt - 1) / nt;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vpme
