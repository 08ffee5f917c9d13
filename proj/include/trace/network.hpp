#pragma once

#include <cstdint>
#include <vector>

#include "trace/autograd.hpp"
#include "trace/tensor.hpp"

namespace trace {

struct ArchConfig {
  int depth = 3;   // encoder levels
  int width = 16;  // channels at every level
  int kernel = 3;
  int cin = 1;
  int cout = 1;
};

// Layer order throughout: stem, enc[0..depth), dec[0..depth), head.
struct NetworkParams {
  ArchConfig arch;
  uint64_t seed = 0;
  std::vector<Tensor> kernels;
  std::vector<Tensor> biases;
};

// stem: width*cin*k^2 + width; per encoder/decoder level: width^2*k^2 (2x for
// the decoder's concatenated input) + width; head: cout*width + cout.
int64_t param_count(const ArchConfig& arch);

// Kaiming-uniform kernels (bound sqrt(6/fan_in)), zero biases.
NetworkParams init_network(const ArchConfig& arch, uint64_t seed);

// Trainable graph wiring for one network evaluation. The input leaf is not
// trainable; params lists every trainable leaf (kernels then biases).
struct NetGraph {
  int input = -1;
  int output = -1;
  std::vector<int> kernel_ids, bias_ids;
  std::vector<int> params;
};

NetGraph build_net_graph(Graph& g, const NetworkParams& p, int h, int w);

void load_params(Graph& g, const NetGraph& net, const NetworkParams& p);
NetworkParams extract_params(const Graph& g, const NetGraph& net, const ArchConfig& arch,
                             uint64_t seed);

// Convenience single evaluation (builds a throwaway graph).
Tensor forward_net(const NetworkParams& p, const Tensor& input);

}  // namespace trace
