#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace resnet_limits {

inline std::size_t default_workers() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Samples are grouped into fixed chunks so reductions do not depend on the
// number of workers: each chunk is folded sequentially, then chunks are
// merged in index order.
inline constexpr std::size_t kChunkSize = 256;

/// Runs body(chunk_index, begin, end) over [0, count) in fixed-size chunks
/// on `workers` threads. The first exception thrown by any chunk is
/// rethrown on the caller's thread.
template <class Body>
void parallel_chunks(std::size_t count, std::size_t workers, Body&& body,
                     std::size_t chunk_size = kChunkSize) {
  const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
  if (n_chunks == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n_chunks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        body(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  if (error) std::rethrow_exception(error);
}

/// Deterministic parallel reduction. `make()` builds an empty accumulator,
/// `step(acc, i)` folds sample i into it, and Acc::merge combines chunks.
template <class Acc, class Make, class Step>
std::vector<Acc> chunk_accumulators(std::size_t count, std::size_t workers,
                                    Make&& make, Step&& step,
                                    std::size_t chunk_size = kChunkSize) {
  const std::size_t n_chunks = (count + chunk_size - 1) / chunk_size;
  std::vector<Acc> chunks;
  chunks.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) chunks.push_back(make());
  parallel_chunks(
      count, workers,
      [&](std::size_t c, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) step(chunks[c], i);
      },
      chunk_size);
  return chunks;
}

template <class Acc>
Acc merge_all(const std::vector<Acc>& parts, Acc init) {
  for (const Acc& p : parts) init.merge(p);
  return init;
}

}  // namespace resnet_limits
