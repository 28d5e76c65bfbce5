#include "hvo/executor.hpp"

#include <algorithm>

namespace hvo {

Executor::Executor(std::size_t jobs) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs_ = jobs;
  errors_.resize(jobs_);
  // The calling thread runs chunk 0 itself.
  for (std::size_t w = 1; w < jobs_; ++w) threads_.emplace_back([this, w] { worker_loop(w); });
}

Executor::~Executor() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void Executor::run_chunk(std::size_t worker) {
  const std::size_t begin = n_ * worker / jobs_;
  const std::size_t end = n_ * (worker + 1) / jobs_;
  if (begin == end) return;
  try {
    (*fn_)(worker, begin, end);
  } catch (...) {
    errors_[worker] = std::current_exception();
  }
}

void Executor::worker_loop(std::size_t worker) {
  std::size_t seen = 0;
  while (true) {
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    run_chunk(worker);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void Executor::parallel_for(std::size_t n, const RangeFn& fn) {
  if (n == 0) return;
  std::fill(errors_.begin(), errors_.end(), nullptr);
  if (jobs_ == 1) {
    fn(0, 0, n);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    fn_ = &fn;
    n_ = n;
    pending_ = jobs_ - 1;
    ++generation_;
  }
  start_cv_.notify_all();
  run_chunk(0);
  {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    fn_ = nullptr;
  }
  for (auto& e : errors_) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace hvo
