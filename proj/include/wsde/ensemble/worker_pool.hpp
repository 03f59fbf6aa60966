#pragma once

#include <condition_variable>
#include <exception>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace wsde {

/// Fixed set of workers executing contiguous index blocks.  The calling
/// thread participates as worker 0; parallel_for returns once every block is
/// done.
class WorkerPool {
 public:
  using BlockFn = std::function<void(std::size_t worker, std::size_t begin, std::size_t end)>;

  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_.size() + 1; }

  void parallel_for(std::size_t n, const BlockFn& fn);

 private:
  void worker_loop(std::size_t index);
  void run_block(std::size_t worker);

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const BlockFn* job_ = nullptr;
  std::size_t job_size_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace wsde
