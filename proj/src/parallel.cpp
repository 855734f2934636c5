#include "lsap/parallel.hpp"

#include <omp.h>

namespace lsap {

namespace {
int g_threads = 0;  // 0 = OpenMP runtime default
}

int configured_threads() { return g_threads; }

void set_threads(int n) { g_threads = n < 0 ? 0 : n; }

namespace detail {
int effective_threads() {
  if (g_threads > 0) return g_threads;
  return omp_get_max_threads();
}
}  // namespace detail

}  // namespace lsap
