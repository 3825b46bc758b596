#pragma once

#include <cstddef>
#include <functional>

namespace curio {

/// Fixed-degree fork/join helper. Work items write to their own output slots, so results
/// never depend on the degree. Calls made from inside a worker run inline.
class Executor {
 public:
  explicit Executor(int parallelism = 1);

  int parallelism() const { return parallelism_; }

  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) const;

 private:
  int parallelism_;
};

/// Runs on `executor` when given, serially otherwise.
void for_each_index(const Executor* executor, std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace curio
