#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "trace/kernels.hpp"
#include "trace/tensor.hpp"

namespace trace {

enum class OpKind {
  leaf,
  add,
  mul,
  scale,
  bias,
  conv2d,
  decimate,
  upsample2x,
  concat_ch,
  leaky_relu,
  sigmoid,
  clip,
  sum_squares,
  radon,
};

struct Node {
  OpKind kind = OpKind::leaf;
  int a = -1, b = -1;  // input node ids; b < 0 for unary ops
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool has_grad = false;

  kern::Conv2dSpec conv;                  // conv2d
  float alpha = 1.f;                      // scale factor / leaky-relu slope
  float lo = 0.f, hi = 1.f;               // clip bounds
  int factor = 2;                         // decimate
  const kern::Csr* mat = nullptr;         // radon system matrix
  const kern::Csr* mat_t = nullptr;       // its transpose, used in backward
};

// Append-only computation record. Node ids are creation indices, so inputs
// always precede their consumers and one reverse sweep differentiates the
// whole thing. Leaves hold data; everything else is recomputed by forward().
class Graph {
 public:
  int leaf(Tensor v, bool requires_grad = false);

  int add(int a, int b);
  int sub(int a, int b) { return add(a, scale(b, -1.f)); }
  int mul(int a, int b);
  int scale(int a, float s);
  int bias(int x, int b);  // b has shape [C], added per channel
  int conv2d(int x, int kernel, PadMode pad, int stride = 1, bool depthwise = false);
  int decimate(int x, int factor);
  int upsample2x(int x);
  int concat_ch(int a, int b);
  int leaky_relu(int x, float slope = 0.1f);
  int sigmoid(int x);
  int clip(int x, float lo = 0.f, float hi = 1.f);
  int sum_squares(int a);
  int radon(int x, const kern::Csr* a, const kern::Csr* at, std::vector<int> out_shape);

  // Recomputes every non-leaf value in creation order.
  void forward();
  // Zeroes gradients, seeds d(out)/d(out) = 1, and accumulates into every
  // node on a differentiable path. `out` must be scalar.
  void backward(int out);

  Tensor& value(int id) { return nodes_[check(id)].value; }
  const Tensor& value(int id) const { return nodes_[check(id)].value; }
  const Tensor& grad(int id) const;
  bool has_grad(int id) const { return nodes_[check(id)].has_grad; }
  OpKind kind(int id) const { return nodes_[check(id)].kind; }
  bool requires_grad(int id) const { return nodes_[check(id)].requires_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Replays the graph in double precision and returns the scalar value of
  // `out`. Leaf values may be overridden (by node id) without touching the
  // stored single-precision graph — this is the finite-difference path.
  double eval_f64(int out,
                  const std::unordered_map<int, std::vector<double>>& leaf_override = {}) const;

 private:
  int check(int id) const;
  int push(Node n);
  void compute(Node& n);

  std::vector<Node> nodes_;
};

}  // namespace trace
