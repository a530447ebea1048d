#pragma once

// Worker pool for pointwise kernels and fixed-shape reductions.
//
// Pointwise work is split into chunks whose boundaries depend only on the
// problem size, never on the worker count. Reductions never run in parallel:
// pairwise_sum uses one recursion tree per length, so every result is
// bit-identical whatever --threads says.

#include <algorithm>
#include <atomic>
#include <complex>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace schx {

class WorkerPool {
 public:
  static WorkerPool& instance() {
    static WorkerPool pool;
    return pool;
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() { stop(); }

  /// Total workers including the calling thread; 1 disables the pool.
  void set_workers(int count) {
    count = std::max(1, count);
    std::lock_guard<std::mutex> lock(config_mutex_);
    if (count == workers_) return;
    stop();
    workers_ = count;
    shutdown_ = false;
    for (int i = 1; i < workers_; ++i) threads_.emplace_back([this] { loop(); });
  }

  int workers() const noexcept { return workers_; }

  /// Runs body(begin, end) over [0, n) in fixed-size chunks.
  void for_range(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    if (workers_ <= 1 || chunks <= 1) {
      if (n > 0) body(0, n);
      return;
    }
    auto job = std::make_shared<Job>();
    job->total = chunks;
    job->run = [&body, n](std::size_t c) {
      const std::size_t b = c * kChunk;
      body(b, std::min(n, b + kChunk));
    };
    {
      std::lock_guard<std::mutex> lock(mutex_);
      current_ = job;
      ++generation_;
    }
    cv_.notify_all();
    work(*job);
    std::unique_lock<std::mutex> lock(job->mutex);
    job->finished.wait(lock, [&] { return job->done == job->total; });
  }

 private:
  struct Job {
    std::function<void(std::size_t)> run;
    std::size_t total = 0;
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    std::mutex mutex;
    std::condition_variable finished;
  };

  WorkerPool() = default;

  void stop() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      shutdown_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  static void work(Job& job) {
    std::size_t finished_here = 0;
    for (;;) {
      const std::size_t c = job.next.fetch_add(1);
      if (c >= job.total) break;
      job.run(c);
      ++finished_here;
    }
    if (finished_here > 0) {
      std::lock_guard<std::mutex> lock(job.mutex);
      job.done += finished_here;
      if (job.done == job.total) job.finished.notify_all();
    }
  }

  void loop() {
    std::size_t seen = generation_;
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
        if (shutdown_) return;
        seen = generation_;
        job = current_;
      }
      if (job) work(*job);
    }
  }

  std::mutex config_mutex_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::vector<std::thread> threads_;
  std::shared_ptr<Job> current_;
  std::size_t generation_ = 0;
  int workers_ = 1;
  bool shutdown_ = false;
};

inline void set_worker_count(int count) { WorkerPool::instance().set_workers(count); }

template <class F>
void parallel_for(std::size_t n, F&& f) {
  WorkerPool::instance().for_range(n, [&f](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) f(i);
  });
}

/// Fixed-shape pairwise summation.
template <class T>
T pairwise_sum(std::span<const T> v) {
  if (v.size() <= 16) {
    T s{};
    for (const T& x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(std::span<const T>(v));
}

/// Sum of f(i) over [0, n) in the same fixed tree as pairwise_sum.
template <class T, class F>
T pairwise_reduce(std::size_t n, F&& f) {
  std::vector<T> terms(n);
  parallel_for(n, [&](std::size_t i) { terms[i] = f(i); });
  return pairwise_sum(std::span<const T>(terms));
}

}  // namespace schx
