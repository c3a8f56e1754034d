#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace oddball {

// Persistent worker pool for data-parallel loops. parallel_for() splits
// [0, n) into one contiguous chunk per worker, so the chunking (and with it
// every floating-point reduction that keys off the slot index) depends only
// on the thread count, never on scheduling.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads = std::thread::hardware_concurrency());
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

  // fn(begin, end, slot) with slot in [0, size()); slot size()-1 runs on the
  // calling thread. Chunks are contiguous and in slot order.
  void parallel_for(std::size_t n,
                    const std::function<void(std::size_t, std::size_t, unsigned)>& fn);

 private:
  struct Task {
    const std::function<void(std::size_t, std::size_t, unsigned)>* fn = nullptr;
    std::size_t n = 0;
  };

  void worker_main(unsigned slot);
  static std::size_t chunk_begin(std::size_t n, unsigned slot, unsigned slots);

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_start_;
  Task task_;
  std::atomic<std::size_t> generation_{0};
  std::atomic<int> pending_{0};
  std::atomic<bool> stop_{false};
};

// nullptr-tolerant helper: runs inline when no pool is supplied.
void parallel_for(ThreadPool* pool, std::size_t n,
                  const std::function<void(std::size_t, std::size_t, unsigned)>& fn);

}  // namespace oddball
