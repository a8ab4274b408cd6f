#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace warpbench::bench {

/// Default worker count: WARPBENCH_THREADS if set, else hardware parallelism.
[[nodiscard]] inline unsigned default_threads() {
  if (const char* env = std::getenv("WARPBENCH_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

/// Persistent worker threads. run() hands one job to every worker and
/// returns once all of them finish, so consecutive calls are separated by a
/// full barrier. The first exception thrown by a worker is rethrown.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads) : n_(threads ? threads : 1) {
    workers_.reserve(n_);
    for (unsigned t = 0; t < n_; ++t) workers_.emplace_back([this, t] { loop(t); });
  }
  ~ThreadPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    start_cv_.notify_all();
    for (auto& w : workers_) w.join();
  }
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  [[nodiscard]] unsigned size() const noexcept { return n_; }

  void run(const std::function<void(unsigned)>& job) {
    std::unique_lock lock(mu_);
    job_ = &job;
    pending_ = n_;
    error_ = nullptr;
    ++generation_;
    start_cv_.notify_all();
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void loop(unsigned tid) {
    std::uint64_t seen = 0;
    for (;;) {
      const std::function<void(unsigned)>* job = nullptr;
      {
        std::unique_lock lock(mu_);
        start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      std::exception_ptr err;
      try {
        (*job)(tid);
      } catch (...) {
        err = std::current_exception();
      }
      std::lock_guard lock(mu_);
      if (err && !error_) error_ = err;
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }

  unsigned n_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(unsigned)>* job_ = nullptr;
  unsigned pending_ = 0;
  std::uint64_t generation_ = 0;
  std::exception_ptr error_;
  bool stop_ = false;
};

/// Contiguous share [begin, end) of n items for worker t of T.
[[nodiscard]] constexpr std::pair<std::size_t, std::size_t> share(std::size_t n, unsigned t, unsigned T) noexcept {
  return {n * t / T, n * (t + 1) / T};
}

}  // namespace warpbench::bench
