#pragma once

#include <exception>
#include <mutex>

#include "sloppykit/types.hpp"

namespace sloppykit::detail {

// Runs fn(0..n-1) serially or under OpenMP. Exceptions cannot cross the
// parallel region, so the first one is captured and rethrown afterwards.
template <class Fn>
void for_each_index(int n, Execution execution, Fn&& fn) {
  if (execution == Execution::Serial) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace sloppykit::detail
