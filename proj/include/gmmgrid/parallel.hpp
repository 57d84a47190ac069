#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace gmmgrid {

/// Worker count: hardware concurrency, capped by GMMGRID_THREADS when set.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GMMGRID_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (...) {
    }
  }
  return n;
}

/// Splits [0, total) into at most `workers` contiguous chunks and runs
/// fn(chunk_index, begin, end) on each. Chunk boundaries depend only on
/// (total, workers); callers that need worker-count independent results must
/// merge per-chunk outputs with an order-insensitive rule.
template <typename Fn>
void parallel_chunks(std::size_t total, unsigned workers, Fn&& fn) {
  if (total == 0) return;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::min<std::size_t>(total, 1u << 16))));
  if (workers == 1) {
    fn(std::size_t{0}, std::size_t{0}, total);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t base = total / workers, extra = total % workers;
  std::size_t begin = 0;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t end = begin + base + (w < extra ? 1 : 0);
    threads.emplace_back([&, w, begin, end] {
      try {
        fn(static_cast<std::size_t>(w), begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace gmmgrid
