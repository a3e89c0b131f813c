// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace icat {

// Runs fn(begin, end) over contiguous chunks of [0, n). Results that depend
// on order must be written into per-index slots by the caller; reductions
// happen after the join, in index order.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers, n);
  const std::size_t per = (n + chunks - 1) / chunks;
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mu;
  auto run = [&](std::size_t begin, std::size_t end) {
    try {
      fn(begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
    }
  };
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t begin = c * per;
    const std::size_t end = std::min(n, begin + per);
    if (begin >= end) break;
    threads.emplace_back(run, begin, end);
  }
  run(0, std::min(n, per));
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

inline int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace icat
