#include "trace/parallel.hpp"

namespace trace {

namespace {
#ifdef _OPENMP
bool g_parallel = true;
#else
bool g_parallel = false;
#endif
}  // namespace

bool parallel_enabled() { return g_parallel; }

void set_parallel_enabled(bool on) {
#ifdef _OPENMP
  g_parallel = on;
#else
  g_parallel = false;
  (void)on;
#endif
}

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_parallel_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace trace
