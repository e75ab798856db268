#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace threadcast {

// OpenMP loop over [0, n) that rethrows the first (lowest index) exception
// on the calling thread instead of terminating.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace threadcast
