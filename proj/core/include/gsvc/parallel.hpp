// Copyright (C) 2026 The gsvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace gsvc {

/// Fixed-size pool of persistent workers. parallel_for hands out indices
/// dynamically, so callers must make each index's work independent of which
/// thread runs it; every reduction in the library is done afterwards in
/// index order.
class WorkerPool {
 public:
  /// `threads` counts the calling thread; 0 picks hardware concurrency.
  explicit WorkerPool(unsigned threads = 0);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

  /// Calls fn(i) for i in [0, count). Blocks until done and rethrows the
  /// first exception raised by fn.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

 private:
  struct Job;
  void worker_loop();
  static void drain(Job& job);

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  std::shared_ptr<Job> job_;
  std::uint64_t generation_ = 0;
  unsigned busy_ = 0;
  bool stopping_ = false;
  std::mutex call_mutex_;
};

}  // namespace gsvc
