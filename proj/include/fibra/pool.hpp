#pragma once

#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fibra {

// Persistent worker pool with per-worker deques and stealing. Tasks write
// only to their own slots, so results do not depend on the schedule.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return static_cast<int>(queues_.size()); }

  // Runs task(0..n_tasks-1), blocking until all complete. The first
  // exception thrown by a task is rethrown here.
  void run(int n_tasks, const std::function<void(int)>& task);

 private:
  struct Queue {
    std::mutex mutex;
    std::deque<int> tasks;
  };

  bool pop_or_steal(int self, int& task);
  void worker_loop(int self);

  std::vector<std::unique_ptr<Queue>> queues_;
  std::vector<std::thread> threads_;

  std::mutex control_mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(int)>* job_ = nullptr;
  std::size_t generation_ = 0;
  int remaining_ = 0;
  bool shutdown_ = false;
  std::exception_ptr first_error_;
};

}  // namespace fibra
