#pragma once

#include <cstddef>
#include <exception>

namespace lsap {

/// Number of OpenMP threads the toolkit will use (0 = runtime default).
int configured_threads();

/// Set the worker count for all subsequent parallel loops. Outputs are
/// required to be byte-identical for every setting; tests rely on that.
void set_threads(int n);

/// Parallel loop over [0, n). Each index writes only its own slots, so the
/// result does not depend on scheduling. Falls back to a plain loop when
/// one thread is configured.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn);

/// Serial reference loop, kept for A/B tests against parallel_for.
template <typename Fn>
void serial_for(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

namespace detail {
int effective_threads();
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const int nt = detail::effective_threads();
  if (nt == 1 || n <= 1) {
    serial_for(n, fn);
    return;
  }
  // Exceptions may not escape an OpenMP region: capture the first one and
  // rethrow afterwards.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(lsap_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace lsap
