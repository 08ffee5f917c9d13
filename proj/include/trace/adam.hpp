#pragma once

#include <cstdint>
#include <vector>

#include "trace/autograd.hpp"
#include "trace/tensor.hpp"

namespace trace {

struct AdamConfig {
  float lr = 1e-3f;
  float b1 = 0.9f;
  float b2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  std::vector<Tensor> m, v;  // one pair per parameter tensor
  int64_t step = 0;

  void reset() {
    m.clear();
    v.clear();
    step = 0;
  }
};

// One Adam update (with bias correction) applied in place to the graph's leaf
// parameters, reading the gradients left by the last backward(). Moment
// buffers are allocated on first use. Throws on non-finite gradients.
void adam_update(Graph& g, const std::vector<int>& param_ids, AdamState& state,
                 const AdamConfig& cfg);

}  // namespace trace
