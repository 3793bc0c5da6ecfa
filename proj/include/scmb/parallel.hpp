#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace scmb {

// `requested` when positive, otherwise the SCMB_THREADS environment variable,
// otherwise 1.
inline unsigned threadCount(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SCMB_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return 1;
}

// Calls fn(chunk, begin, end) over `chunks` contiguous slices of [0, n). The
// slicing depends only on n and chunks, so per-chunk results merged in chunk
// order are schedule independent.
template <typename Fn>
void parallelChunks(std::size_t n, unsigned threads, std::size_t chunks, Fn&& fn) {
  if (chunks == 0) chunks = 1;
  auto range = [&](std::size_t c) {
    return std::pair<std::size_t, std::size_t>{n * c / chunks, n * (c + 1) / chunks};
  };
  if (threads <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [b, e] = range(c);
      fn(c, b, e);
    }
    return;
  }
  std::exception_ptr error;
  std::mutex guard;
  std::size_t nextChunk = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t c;
      {
        std::lock_guard lock(guard);
        if (nextChunk >= chunks || error) return;
        c = nextChunk++;
      }
      try {
        auto [b, e] = range(c);
        fn(c, b, e);
      } catch (...) {
        std::lock_guard lock(guard);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace scmb
