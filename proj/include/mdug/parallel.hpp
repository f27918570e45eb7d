#pragma once

#include <exception>
#include <mutex>

namespace mdug {

/// Runs body(i) for i in [0, n) across OpenMP threads. The first exception thrown by
/// any iteration is rethrown on the calling thread once the loop finishes.
template <class Body>
void parallel_for(long n, Body&& body) {
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace mdug
