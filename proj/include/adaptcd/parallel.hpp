#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace adaptcd {

/// Runs body(i) for i in [0, n) on up to `workers` threads, contiguous static
/// chunks, calling thread included. The first exception (lowest chunk) is
/// rethrown after all chunks finish.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  const std::size_t chunks = std::max<std::size_t>(1, std::min(workers, n));
  if (chunks == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks);
  auto run_chunk = [&](std::size_t c) {
    const std::size_t lo = n * c / chunks;
    const std::size_t hi = n * (c + 1) / chunks;
    try {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(chunks - 1);
    for (std::size_t c = 1; c < chunks; ++c) threads.emplace_back(run_chunk, c);
    run_chunk(0);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace adaptcd
