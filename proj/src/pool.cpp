#include "oddball/pool.hpp"

namespace oddball {

namespace {
// Tight training loops dispatch thousands of small regions per second;
// spinning this long before sleeping hides most of the wakeup latency.
constexpr int kSpinRounds = 20000;
}  // namespace

ThreadPool::ThreadPool(unsigned threads) {
  if (threads < 1) threads = 1;
  workers_.reserve(threads - 1);
  for (unsigned slot = 0; slot + 1 < threads; ++slot)
    workers_.emplace_back([this, slot] { worker_main(slot); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mu_);
    stop_.store(true, std::memory_order_relaxed);
  }
  cv_start_.notify_all();
  for (auto& w : workers_) w.join();
}

std::size_t ThreadPool::chunk_begin(std::size_t n, unsigned slot, unsigned slots) {
  return n * slot / slots;
}

void ThreadPool::worker_main(unsigned slot) {
  std::size_t seen = 0;
  for (;;) {
    // Spin first; fall back to the condition variable when idle.
    bool ready = false;
    for (int spin = 0; spin < kSpinRounds; ++spin) {
      if (generation_.load(std::memory_order_acquire) != seen ||
          stop_.load(std::memory_order_relaxed)) {
        ready = true;
        break;
      }
    }
    Task task;
    {
      std::unique_lock lock(mu_);
      if (!ready)
        cv_start_.wait(lock, [&] {
          return stop_.load(std::memory_order_relaxed) ||
                 generation_.load(std::memory_order_relaxed) != seen;
        });
      if (stop_.load(std::memory_order_relaxed)) return;
      seen = generation_.load(std::memory_order_relaxed);
      task = task_;
    }
    const unsigned slots = size();
    const std::size_t begin = chunk_begin(task.n, slot, slots);
    const std::size_t end = chunk_begin(task.n, slot + 1, slots);
    if (begin < end) (*task.fn)(begin, end, slot);
    pending_.fetch_sub(1, std::memory_order_acq_rel);
  }
}

void ThreadPool::parallel_for(
    std::size_t n, const std::function<void(std::size_t, std::size_t, unsigned)>& fn) {
  const unsigned slots = size();
  if (slots == 1 || n <= 1) {
    if (n > 0) fn(0, n, slots - 1);
    return;
  }
  {
    std::lock_guard lock(mu_);
    task_.fn = &fn;
    task_.n = n;
    pending_.store(static_cast<int>(workers_.size()), std::memory_order_relaxed);
    generation_.fetch_add(1, std::memory_order_release);
  }
  cv_start_.notify_all();
  // The calling thread takes the last chunk, then spins for the rest.
  const std::size_t begin = chunk_begin(n, slots - 1, slots);
  if (begin < n) fn(begin, n, slots - 1);
  while (pending_.load(std::memory_order_acquire) != 0) {
  }
}

void parallel_for(ThreadPool* pool, std::size_t n,
                  const std::function<void(std::size_t, std::size_t, unsigned)>& fn) {
  if (pool) {
    pool->parallel_for(n, fn);
  } else if (n > 0) {
    fn(0, n, 0);
  }
}

}  // namespace oddball
