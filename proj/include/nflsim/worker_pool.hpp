#pragma once

#include <cstddef>
#include <functional>

namespace nflsim {

// Fork-join helper for independent per-client work. Results must not depend
// on the worker count; callers write into per-index slots.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) : workers_(workers < 1 ? 1 : workers) {}

  int size() const { return workers_; }

  // Runs fn(i) for every i in [0, count). If any call throws, the exception
  // of the lowest failing index is rethrown after all work finishes.
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) const;

 private:
  int workers_;
};

}  // namespace nflsim
