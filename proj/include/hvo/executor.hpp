#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hvo {

/// Fixed-size worker pool for data-parallel loops. Work is split into
/// contiguous static chunks, one per worker, so the assignment of items to
/// workers depends only on the item count and the pool size.
class Executor {
 public:
  using RangeFn = std::function<void(std::size_t worker, std::size_t begin, std::size_t end)>;

  /// jobs == 0 selects the hardware concurrency.
  explicit Executor(std::size_t jobs = 1);
  ~Executor();
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  std::size_t jobs() const { return jobs_; }

  /// Runs fn over [0, n) and blocks until every chunk has finished. The
  /// first exception (by worker index) is rethrown on the calling thread.
  void parallel_for(std::size_t n, const RangeFn& fn);

 private:
  void worker_loop(std::size_t worker);
  void run_chunk(std::size_t worker);

  std::size_t jobs_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const RangeFn* fn_ = nullptr;
  std::size_t n_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

}  // namespace hvo
