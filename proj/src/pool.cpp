#include "fibra/pool.hpp"

#include "fibra/error.hpp"

namespace fibra {

WorkerPool::WorkerPool(int workers) {
  if (workers < 1) throw ConfigError("worker pool needs >= 1 worker");
  queues_.reserve(workers);
  for (int w = 0; w < workers; ++w) queues_.push_back(std::make_unique<Queue>());
  if (workers > 1) {
    threads_.reserve(workers);
    for (int w = 0; w < workers; ++w)
      threads_.emplace_back([this, w] { worker_loop(w); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(control_mutex_);
    shutdown_ = true;
  }
  start_cv_.notify_all();
  for (std::thread& t : threads_) t.join();
}

bool WorkerPool::pop_or_steal(int self, int& task) {
  {
    Queue& q = *queues_[self];
    std::lock_guard<std::mutex> lock(q.mutex);
    if (!q.tasks.empty()) {
      task = q.tasks.back();
      q.tasks.pop_back();
      return true;
    }
  }
  const int n = size();
  for (int d = 1; d < n; ++d) {
    Queue& q = *queues_[(self + d) % n];
    std::lock_guard<std::mutex> lock(q.mutex);
    if (!q.tasks.empty()) {
      task = q.tasks.front();  // steal the oldest
      q.tasks.pop_front();
      return true;
    }
  }
  return false;
}

void WorkerPool::worker_loop(int self) {
  std::size_t seen = 0;
  while (true) {
    const std::function<void(int)>* job = nullptr;
    {
      std::unique_lock<std::mutex> lock(control_mutex_);
      start_cv_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
      if (shutdown_) return;
      seen = generation_;
      job = job_;
    }
    int task;
    while (pop_or_steal(self, task)) {
      try {
        (*job)(task);
      } catch (...) {
        std::lock_guard<std::mutex> lock(control_mutex_);
        if (!first_error_) first_error_ = std::current_exception();
      }
      std::lock_guard<std::mutex> lock(control_mutex_);
      if (--remaining_ == 0) done_cv_.notify_all();
    }
  }
}

void WorkerPool::run(int n_tasks, const std::function<void(int)>& task) {
  if (n_tasks <= 0) return;
  if (threads_.empty()) {  // single worker runs inline
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(control_mutex_);
    first_error_ = nullptr;
    remaining_ = n_tasks;
    job_ = &task;
    const int n = size();
    for (int i = 0; i < n_tasks; ++i) {
      Queue& q = *queues_[i % n];
      std::lock_guard<std::mutex> qlock(q.mutex);
      q.tasks.push_back(i);
    }
    ++generation_;
  }
  start_cv_.notify_all();
  std::unique_lock<std::mutex> lock(control_mutex_);
  done_cv_.wait(lock, [&] { return remaining_ == 0; });
  job_ = nullptr;
  if (first_error_) std::rethrow_exception(first_error_);
}

}  // namespace fibra
