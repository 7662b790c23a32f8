#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace qmem {

[[nodiscard]] inline unsigned resolve_workers(unsigned requested) noexcept {
  if (requested != 0) {
    return requested;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Splits [0, n) into contiguous chunks, runs `body(worker, begin, end)` for
/// each on its own thread and returns once all have finished. Results must be
/// combined by the caller with an order-independent reduction.
template <class Body>
void parallel_chunks(std::uint64_t n, unsigned workers, Body&& body) {
  workers = static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(workers), std::max<std::uint64_t>(n, 1)));
  if (workers <= 1) {
    body(0U, std::uint64_t{0}, n);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  const std::uint64_t chunk = n / workers;
  const std::uint64_t extra = n % workers;
  std::uint64_t begin = 0;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t end = begin + chunk + (w < extra ? 1 : 0);
    threads.emplace_back([&body, w, begin, end] { body(w, begin, end); });
    begin = end;
  }
}

} // namespace qmem
