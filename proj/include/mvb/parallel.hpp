#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace mvb {

/// Number of workers implied by a --jobs style argument (0 = all cores).
inline int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Results must be combined by the caller (e.g. per-chunk counters
/// summed afterwards) so the outcome is independent of the thread count.
template <typename Fn>
void parallel_chunks(std::int64_t n, int jobs, Fn&& fn) {
  jobs = resolve_jobs(jobs);
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(jobs, n));
  if (workers <= 1) {
    fn(std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mvb
