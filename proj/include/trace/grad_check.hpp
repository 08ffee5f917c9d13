#pragma once

#include <cstdint>
#include <vector>

#include "trace/autograd.hpp"

namespace trace {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
};

// Compares reverse-mode gradients of the scalar node `out` against central
// finite differences computed by double-precision replay. Large parameter
// tensors are subsampled (at most max_coords_per_leaf coordinates each,
// chosen by `seed`); the relative error uses a unit floor so near-zero
// gradients are judged absolutely.
GradCheckResult finite_difference_check(Graph& g, int out, const std::vector<int>& leaf_ids,
                                        double h = 1e-3, uint64_t seed = 0,
                                        int max_coords_per_leaf = 48);

}  // namespace trace
