#ifndef SOFICLAB_PARALLEL_HPP
#define SOFICLAB_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace soficlab {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
// processed exactly once; callers write into per-index slots and reduce in
// index order afterwards, so results never depend on `jobs`.
template <typename Body>
void parallel_for(std::size_t count, unsigned jobs, Body&& body) {
  jobs = std::max(1U, jobs);
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  const auto threads = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// Number of fixed-size blocks covering `count` items.
constexpr std::size_t block_count(std::size_t count, std::size_t block) {
  return (count + block - 1) / block;
}

}  // namespace soficlab

#endif  // SOFICLAB_PARALLEL_HPP
