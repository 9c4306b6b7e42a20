#include "nflsim/worker_pool.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace nflsim {

void WorkerPool::parallel_for(std::size_t count,
                              const std::function<void(std::size_t)>& fn) const {
  std::vector<std::exception_ptr> errors(count);
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(workers_), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::jthread> crew;
    for (std::size_t t = 0; t < threads; ++t) crew.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace nflsim
