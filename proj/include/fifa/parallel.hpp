#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include "fifa/kernels.hpp"

namespace fifa {

/// Runs body(i) for i in [0, n) with dynamic OpenMP scheduling. Each index
/// must write only to its own slot. The first exception thrown by any
/// iteration is rethrown on the calling thread once the loop finishes.
template <class Body>
void parallel_for(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace fifa
