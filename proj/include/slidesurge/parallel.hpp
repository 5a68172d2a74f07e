#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace slidesurge {

/// Persistent worker pool for data-parallel loops over grid rows.
///
/// Determinism contract: work is divided into blocks whose layout depends
/// only on the problem size, never on the worker count.  Workers claim
/// blocks from an atomic counter, so which thread runs a block is
/// scheduling-dependent, but every block writes to its own disjoint output
/// range and reductions are combined serially in block order by the caller.
/// Consequently results are bit-identical for any number of workers.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) : workers_(workers) {
    if (workers < 1) throw std::invalid_argument("ThreadPool: worker count must be >= 1");
    // The calling thread acts as worker 0; spawn the rest.
    threads_.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      shutdown_ = true;
      ++epoch_;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  int worker_count() const { return workers_; }

  /// Runs fn(block) for every block in [0, nblocks).  Blocks are claimed
  /// dynamically; the caller participates.  Rethrows the first exception
  /// raised by any block.
  void run_blocks(int nblocks, const std::function<void(int)>& fn) {
    if (nblocks <= 0) return;
    if (workers_ == 1) {
      for (int b = 0; b < nblocks; ++b) fn(b);
      return;
    }
    auto job = std::make_shared<Job>();
    job->fn = &fn;
    job->nblocks = nblocks;
    job->remaining.store(nblocks, std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      current_ = job;
      ++epoch_;
    }
    cv_.notify_all();
    execute(*job);  // participate as worker 0
    {
      std::unique_lock<std::mutex> lock(job->done_mutex);
      job->done.wait(lock, [&] { return job->remaining.load(std::memory_order_acquire) == 0; });
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (current_ == job) current_.reset();
    }
    if (job->error) std::rethrow_exception(job->error);
  }

 private:
  struct Job {
    const std::function<void(int)>* fn = nullptr;
    int nblocks = 0;
    std::atomic<int> next{0};
    std::atomic<int> remaining{0};
    std::mutex done_mutex;
    std::condition_variable done;
    std::exception_ptr error;
  };

  // A worker that claims block b < nblocks is guaranteed the job (and the
  // caller's fn) stays alive until it finishes: the caller cannot return
  // from run_blocks before `remaining` reaches zero.
  static void execute(Job& job) {
    while (true) {
      const int b = job.next.fetch_add(1, std::memory_order_relaxed);
      if (b >= job.nblocks) return;
      try {
        (*job.fn)(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(job.done_mutex);
        if (!job.error) job.error = std::current_exception();
      }
      if (job.remaining.fetch_sub(1, std::memory_order_acq_rel) == 1) {
        std::lock_guard<std::mutex> lock(job.done_mutex);
        job.done.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    while (true) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return epoch_ != seen; });
        seen = epoch_;
        if (shutdown_) return;
        job = current_;
      }
      if (job) execute(*job);
    }
  }

  int workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::shared_ptr<Job> current_;
  std::uint64_t epoch_ = 0;
  bool shutdown_ = false;
};

/// Runs fn(j) for every row j in [0, ny).  With a null pool the loop runs
/// inline, which is bit-identical to the pooled version by construction.
inline void parallel_rows(ThreadPool* pool, int ny, const std::function<void(int)>& fn) {
  if (!pool || pool->worker_count() == 1) {
    for (int j = 0; j < ny; ++j) fn(j);
    return;
  }
  pool->run_blocks(ny, fn);
}

/// Per-row partial reduction combined serially in row order, so the result
/// does not depend on the worker count.  `row_fn(j)` returns row j's partial;
/// `combine(acc, partial)` folds partials in ascending row order.
template <typename T, typename RowFn, typename Combine>
T ordered_row_reduce(ThreadPool* pool, int ny, T init, RowFn row_fn, Combine combine) {
  std::vector<T> partials(static_cast<std::size_t>(ny > 0 ? ny : 0), init);
  parallel_rows(pool, ny, [&](int j) { partials[static_cast<std::size_t>(j)] = row_fn(j); });
  T acc = init;
  for (int j = 0; j < ny; ++j) acc = combine(acc, partials[static_cast<std::size_t>(j)]);
  return acc;
}

/// Worker count resolution used by the command-line tools: the
/// SLIDESURGE_THREADS environment variable overrides any explicit request,
/// then the request, then 1.
inline int resolve_worker_count(int requested) {
  if (const char* env = std::getenv("SLIDESURGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && *env != '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    throw std::invalid_argument("SLIDESURGE_THREADS must be an integer in [1, 1024]");
  }
  if (requested > 0) return requested;
  return 1;
}

}  // namespace slidesurge
