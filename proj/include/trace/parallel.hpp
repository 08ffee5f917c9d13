#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trace {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Parallel kernels split work over disjoint output elements with a fixed
// per-element accumulation order, so results are bitwise identical to the
// serial path for any thread count.
bool parallel_enabled();
void set_parallel_enabled(bool on);

// Thread count for the OpenMP kernels. 0 = library default.
int parallel_threads();
void set_parallel_threads(int n);

}  // namespace trace
