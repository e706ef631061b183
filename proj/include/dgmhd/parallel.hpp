#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace dgmhd {

/// Splits [0, n) into `n_threads` contiguous chunks and runs
/// fn(chunk_id, begin, end) on each, chunk 0 on the calling thread.
/// Chunk boundaries depend only on (n, n_threads), so reductions done in
/// chunk order are deterministic.
template <class Fn>
void parallel_chunks(int n, int n_threads, Fn&& fn) {
  n_threads = std::max(1, std::min(n_threads, n));
  if (n_threads == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(n_threads);
  auto run = [&](int c) {
    const int begin = static_cast<int>(static_cast<long long>(n) * c / n_threads);
    const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / n_threads);
    try {
      fn(c, begin, end);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> workers;
    for (int c = 1; c < n_threads; ++c) workers.emplace_back(run, c);
    run(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace dgmhd
