#include "curio/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace curio {

namespace {
thread_local bool t_inside_worker = false;
}

Executor::Executor(int parallelism) : parallelism_(parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
}

void Executor::parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) const {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism_), count);
  if (workers <= 1 || t_inside_worker) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  // the lowest failing index wins so the reported error does not depend on scheduling
  std::exception_ptr first_error;
  std::size_t first_error_index = count;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        t_inside_worker = true;
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (i < first_error_index) {
              first_error_index = i;
              first_error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

void for_each_index(const Executor* executor, std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (executor)
    executor->parallel_for(count, fn);
  else
    for (std::size_t i = 0; i < count; ++i) fn(i);
}

}  // namespace curio
