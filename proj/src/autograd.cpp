#include "trace/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trace {
namespace {

template <class T>
void eltwise_add(const T* a, const T* b, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

template <class T>
void eltwise_mul(const T* a, const T* b, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

template <class T>
void eltwise_scale(const T* a, T s, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = s * a[i];
}

template <class T>
void bias_fwd(const T* x, const T* b, T* y, int c, int64_t plane) {
  for (int ci = 0; ci < c; ++ci)
    for (int64_t i = 0; i < plane; ++i) y[ci * plane + i] = x[ci * plane + i] + b[ci];
}

template <class T>
void decimate_fwd(const T* x, T* y, int c, int h, int w, int f) {
  const int oh = h / f, ow = w / f;
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        y[(static_cast<int64_t>(ci) * oh + i) * ow + j] =
            x[(static_cast<int64_t>(ci) * h + i * f) * w + static_cast<int64_t>(j) * f];
}

template <class T>
void upsample2x_fwd(const T* x, T* y, int c, int h, int w) {
  const int oh = 2 * h, ow = 2 * w;
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        y[(static_cast<int64_t>(ci) * oh + i) * ow + j] =
            x[(static_cast<int64_t>(ci) * h + i / 2) * w + j / 2];
}

template <class T>
void lrelu_fwd(const T* x, T* y, int64_t n, T slope) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <class T>
void sigmoid_fwd(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
}

template <class T>
void clip_fwd(const T* x, T* y, int64_t n, T lo, T hi) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
}

template <class T>
double sumsq(const T* x, int64_t n) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]) * static_cast<double>(x[i]);
  return acc;
}

std::vector<int> conv_out_shape(const kern::Conv2dSpec& s) {
  return {s.cout, s.out_h(), s.out_w()};
}

}  // namespace

int Graph::check(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("graph: bad node id " + std::to_string(id));
  return id;
}

int Graph::push(Node n) {
  if (n.kind != OpKind::leaf) {
    n.requires_grad = nodes_[n.a].requires_grad;
    if (n.b >= 0) n.requires_grad = n.requires_grad || nodes_[n.b].requires_grad;
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Graph::grad(int id) const {
  const Node& n = nodes_[check(id)];
  if (!n.has_grad) throw std::runtime_error("graph: gradient not computed for node");
  return n.grad;
}

int Graph::leaf(Tensor v, bool requires_grad) {
  Node n;
  n.kind = OpKind::leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(v);
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  require_same_shape(value(check(a)), value(check(b)), "add");
  Node n;
  n.kind = OpKind::add;
  n.a = a;
  n.b = b;
  n.value = Tensor(nodes_[a].value.shape);
  return push(std::move(n));
}

int Graph::mul(int a, int b) {
  require_same_shape(value(check(a)), value(check(b)), "mul");
  Node n;
  n.kind = OpKind::mul;
  n.a = a;
  n.b = b;
  n.value = Tensor(nodes_[a].value.shape);
  return push(std::move(n));
}

int Graph::scale(int a, float s) {
  Node n;
  n.kind = OpKind::scale;
  n.a = check(a);
  n.alpha = s;
  n.value = Tensor(nodes_[a].value.shape);
  return push(std::move(n));
}

int Graph::bias(int x, int b) {
  const Tensor& xv = value(check(x));
  const Tensor& bv = value(check(b));
  if (xv.shape.size() != 3 || bv.shape.size() != 1 || bv.shape[0] != xv.shape[0])
    throw std::invalid_argument("bias: expected [C,H,W] input and [C] bias");
  Node n;
  n.kind = OpKind::bias;
  n.a = x;
  n.b = b;
  n.value = Tensor(xv.shape);
  return push(std::move(n));
}

int Graph::conv2d(int x, int kernel, PadMode pad, int stride, bool depthwise) {
  const Tensor& xv = value(check(x));
  const Tensor& kv = value(check(kernel));
  if (xv.shape.size() != 3 || kv.shape.size() != 4)
    throw std::invalid_argument("conv2d: expected [Cin,H,W] input and [Cout,Cin,k,k] kernel");
  kern::Conv2dSpec s;
  s.cin = xv.shape[0];
  s.h = xv.shape[1];
  s.w = xv.shape[2];
  s.cout = kv.shape[0];
  s.k = kv.shape[2];
  s.stride = stride;
  s.pad = pad;
  s.depthwise = depthwise;
  if (kv.shape[2] != kv.shape[3]) throw std::invalid_argument("conv2d: kernel must be square");
  if (depthwise) {
    if (kv.shape[1] != 1) throw std::invalid_argument("conv2d: depthwise kernel must be [C,1,k,k]");
  } else if (kv.shape[1] != s.cin) {
    throw std::invalid_argument("conv2d: kernel Cin mismatch");
  }
  s.validate();
  Node n;
  n.kind = OpKind::conv2d;
  n.a = x;
  n.b = kernel;
  n.conv = s;
  n.value = Tensor(conv_out_shape(s));
  return push(std::move(n));
}

int Graph::decimate(int x, int factor) {
  const Tensor& xv = value(check(x));
  if (xv.shape.size() != 3) throw std::invalid_argument("decimate: expected [C,H,W]");
  if (factor < 1 || xv.shape[1] % factor || xv.shape[2] % factor)
    throw std::invalid_argument("decimate: extents must divide by factor");
  Node n;
  n.kind = OpKind::decimate;
  n.a = x;
  n.factor = factor;
  n.value = Tensor({xv.shape[0], xv.shape[1] / factor, xv.shape[2] / factor});
  return push(std::move(n));
}

int Graph::upsample2x(int x) {
  const Tensor& xv = value(check(x));
  if (xv.shape.size() != 3) throw std::invalid_argument("upsample2x: expected [C,H,W]");
  Node n;
  n.kind = OpKind::upsample2x;
  n.a = x;
  n.value = Tensor({xv.shape[0], 2 * xv.shape[1], 2 * xv.shape[2]});
  return push(std::move(n));
}

int Graph::concat_ch(int a, int b) {
  const Tensor& av = value(check(a));
  const Tensor& bv = value(check(b));
  if (av.shape.size() != 3 || bv.shape.size() != 3 || av.shape[1] != bv.shape[1] ||
      av.shape[2] != bv.shape[2])
    throw std::invalid_argument("concat_ch: spatial extents must match");
  Node n;
  n.kind = OpKind::concat_ch;
  n.a = a;
  n.b = b;
  n.value = Tensor({av.shape[0] + bv.shape[0], av.shape[1], av.shape[2]});
  return push(std::move(n));
}

int Graph::leaky_relu(int x, float slope) {
  Node n;
  n.kind = OpKind::leaky_relu;
  n.a = check(x);
  n.alpha = slope;
  n.value = Tensor(nodes_[x].value.shape);
  return push(std::move(n));
}

int Graph::sigmoid(int x) {
  Node n;
  n.kind = OpKind::sigmoid;
  n.a = check(x);
  n.value = Tensor(nodes_[x].value.shape);
  return push(std::move(n));
}

int Graph::clip(int x, float lo, float hi) {
  Node n;
  n.kind = OpKind::clip;
  n.a = check(x);
  n.lo = lo;
  n.hi = hi;
  n.value = Tensor(nodes_[x].value.shape);
  return push(std::move(n));
}

int Graph::sum_squares(int a) {
  Node n;
  n.kind = OpKind::sum_squares;
  n.a = check(a);
  n.value = Tensor({1});
  return push(std::move(n));
}

int Graph::radon(int x, const kern::Csr* a, const kern::Csr* at, std::vector<int> out_shape) {
  const Tensor& xv = value(check(x));
  if (!a || !at) throw std::invalid_argument("radon: null system matrix");
  if (a->cols != xv.numel()) throw std::invalid_argument("radon: matrix cols != input size");
  if (a->rows != Tensor::numel_of(out_shape))
    throw std::invalid_argument("radon: matrix rows != output size");
  Node n;
  n.kind = OpKind::radon;
  n.a = x;
  n.mat = a;
  n.mat_t = at;
  n.value = Tensor(std::move(out_shape));
  return push(std::move(n));
}

void Graph::compute(Node& n) {
  const float* a = n.a >= 0 ? nodes_[n.a].value.data.data() : nullptr;
  const float* b = n.b >= 0 ? nodes_[n.b].value.data.data() : nullptr;
  float* y = n.value.data.data();
  const int64_t numel = n.value.numel();
  switch (n.kind) {
    case OpKind::leaf: break;
    case OpKind::add: eltwise_add(a, b, y, numel); break;
    case OpKind::mul: eltwise_mul(a, b, y, numel); break;
    case OpKind::scale: eltwise_scale(a, n.alpha, y, numel); break;
    case OpKind::bias: {
      const auto& s = nodes_[n.a].value.shape;
      bias_fwd(a, b, y, s[0], static_cast<int64_t>(s[1]) * s[2]);
      break;
    }
    case OpKind::conv2d: kern::conv2d_forward(a, b, y, n.conv); break;
    case OpKind::decimate: {
      const auto& s = nodes_[n.a].value.shape;
      decimate_fwd(a, y, s[0], s[1], s[2], n.factor);
      break;
    }
    case OpKind::upsample2x: {
      const auto& s = nodes_[n.a].value.shape;
      upsample2x_fwd(a, y, s[0], s[1], s[2]);
      break;
    }
    case OpKind::concat_ch: {
      const int64_t na = nodes_[n.a].value.numel();
      for (int64_t i = 0; i < na; ++i) y[i] = a[i];
      const int64_t nb = nodes_[n.b].value.numel();
      for (int64_t i = 0; i < nb; ++i) y[na + i] = b[i];
      break;
    }
    case OpKind::leaky_relu: lrelu_fwd(a, y, numel, n.alpha); break;
    case OpKind::sigmoid: sigmoid_fwd(a, y, numel); break;
    case OpKind::clip: clip_fwd(a, y, numel, n.lo, n.hi); break;
    case OpKind::sum_squares:
      y[0] = static_cast<float>(sumsq(a, nodes_[n.a].value.numel()));
      break;
    case OpKind::radon: kern::csr_matvec(*n.mat, a, y); break;
  }
}

void Graph::forward() {
  for (Node& n : nodes_)
    if (n.kind != OpKind::leaf) compute(n);
}

void Graph::backward(int out) {
  check(out);
  if (nodes_[out].value.numel() != 1)
    throw std::invalid_argument("backward: output node must be scalar");
  for (Node& n : nodes_) {
    if (!n.requires_grad && &n != &nodes_[out]) continue;
    if (n.grad.shape != n.value.shape) n.grad = Tensor(n.value.shape);
    std::fill(n.grad.data.begin(), n.grad.data.end(), 0.f);
    n.has_grad = true;
  }
  nodes_[out].grad.data[0] = 1.f;

  for (int i = out; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.kind == OpKind::leaf) continue;
    const float* g = n.grad.data.data();
    const int64_t numel = n.value.numel();
    Node& na = nodes_[n.a];
    float* ga = na.requires_grad ? na.grad.data.data() : nullptr;
    Node* nb = n.b >= 0 ? &nodes_[n.b] : nullptr;
    float* gb = (nb && nb->requires_grad) ? nb->grad.data.data() : nullptr;
    switch (n.kind) {
      case OpKind::leaf: break;
      case OpKind::add:
        if (ga)
          for (int64_t j = 0; j < numel; ++j) ga[j] += g[j];
        if (gb)
          for (int64_t j = 0; j < numel; ++j) gb[j] += g[j];
        break;
      case OpKind::mul: {
        const float* av = na.value.data.data();
        const float* bv = nb->value.data.data();
        if (ga)
          for (int64_t j = 0; j < numel; ++j) ga[j] += g[j] * bv[j];
        if (gb)
          for (int64_t j = 0; j < numel; ++j) gb[j] += g[j] * av[j];
        break;
      }
      case OpKind::scale:
        if (ga)
          for (int64_t j = 0; j < numel; ++j) ga[j] += n.alpha * g[j];
        break;
      case OpKind::bias: {
        if (ga)
          for (int64_t j = 0; j < numel; ++j) ga[j] += g[j];
        if (gb) {
          const auto& s = na.value.shape;
          const int64_t plane = static_cast<int64_t>(s[1]) * s[2];
          for (int c = 0; c < s[0]; ++c) {
            double acc = 0.0;
            for (int64_t j = 0; j < plane; ++j) acc += static_cast<double>(g[c * plane + j]);
            gb[c] += static_cast<float>(acc);
          }
        }
        break;
      }
      case OpKind::conv2d:
        if (ga) kern::conv2d_backward_input(g, nb->value.data.data(), ga, n.conv);
        if (gb) kern::conv2d_backward_kernel(g, na.value.data.data(), gb, n.conv);
        break;
      case OpKind::decimate: {
        if (ga) {
          const auto& s = na.value.shape;
          const int f = n.factor, oh = s[1] / f, ow = s[2] / f;
          for (int c = 0; c < s[0]; ++c)
            for (int i2 = 0; i2 < oh; ++i2)
              for (int j2 = 0; j2 < ow; ++j2)
                ga[(static_cast<int64_t>(c) * s[1] + i2 * f) * s[2] +
                   static_cast<int64_t>(j2) * f] +=
                    g[(static_cast<int64_t>(c) * oh + i2) * ow + j2];
        }
        break;
      }
      case OpKind::upsample2x: {
        if (ga) {
          const auto& s = na.value.shape;
          const int oh = 2 * s[1], ow = 2 * s[2];
          for (int c = 0; c < s[0]; ++c)
            for (int i2 = 0; i2 < s[1]; ++i2)
              for (int j2 = 0; j2 < s[2]; ++j2) {
                float acc = 0.f;
                for (int u = 0; u < 2; ++u)
                  for (int v = 0; v < 2; ++v)
                    acc += g[(static_cast<int64_t>(c) * oh + 2 * i2 + u) * ow + 2 * j2 + v];
                ga[(static_cast<int64_t>(c) * s[1] + i2) * s[2] + j2] += acc;
              }
        }
        break;
      }
      case OpKind::concat_ch: {
        const int64_t sa = na.value.numel();
        if (ga)
          for (int64_t j = 0; j < sa; ++j) ga[j] += g[j];
        if (gb) {
          const int64_t sb = nb->value.numel();
          for (int64_t j = 0; j < sb; ++j) gb[j] += g[sa + j];
        }
        break;
      }
      case OpKind::leaky_relu: {
        if (ga) {
          const float* xv = na.value.data.data();
          for (int64_t j = 0; j < numel; ++j)
            ga[j] += g[j] * (xv[j] > 0.f ? 1.f : n.alpha);
        }
        break;
      }
      case OpKind::sigmoid: {
        if (ga) {
          const float* yv = n.value.data.data();
          for (int64_t j = 0; j < numel; ++j) ga[j] += g[j] * yv[j] * (1.f - yv[j]);
        }
        break;
      }
      case OpKind::clip: {
        if (ga) {
          const float* xv = na.value.data.data();
          for (int64_t j = 0; j < numel; ++j)
            ga[j] += (xv[j] >= n.lo && xv[j] <= n.hi) ? g[j] : 0.f;
        }
        break;
      }
      case OpKind::sum_squares: {
        if (ga) {
          const float g0 = g[0];
          const float* xv = na.value.data.data();
          const int64_t m = na.value.numel();
          for (int64_t j = 0; j < m; ++j) ga[j] += 2.f * g0 * xv[j];
        }
        break;
      }
      case OpKind::radon: {
        if (ga) {
          const int64_t m = na.value.numel();
          std::vector<float> tmp(static_cast<size_t>(m));
          kern::csr_matvec(*n.mat_t, g, tmp.data());
          for (int64_t j = 0; j < m; ++j) ga[j] += tmp[j];
        }
        break;
      }
    }
  }
}

double Graph::eval_f64(int out,
                       const std::unordered_map<int, std::vector<double>>& leaf_override) const {
  check(out);
  if (nodes_[out].value.numel() != 1)
    throw std::invalid_argument("eval_f64: output node must be scalar");
  std::vector<std::vector<double>> vals(nodes_.size());
  for (int i = 0; i <= out; ++i) {
    const Node& n = nodes_[i];
    const int64_t numel = n.value.numel();
    std::vector<double>& y = vals[i];
    y.resize(static_cast<size_t>(numel));
    const double* a = n.a >= 0 ? vals[n.a].data() : nullptr;
    const double* b = n.b >= 0 ? vals[n.b].data() : nullptr;
    switch (n.kind) {
      case OpKind::leaf: {
        auto it = leaf_override.find(i);
        if (it != leaf_override.end()) {
          if (static_cast<int64_t>(it->second.size()) != numel)
            throw std::invalid_argument("eval_f64: override size mismatch");
          y = it->second;
        } else {
          for (int64_t j = 0; j < numel; ++j) y[static_cast<size_t>(j)] = n.value.data[j];
        }
        break;
      }
      case OpKind::add: eltwise_add(a, b, y.data(), numel); break;
      case OpKind::mul: eltwise_mul(a, b, y.data(), numel); break;
      case OpKind::scale: eltwise_scale(a, static_cast<double>(n.alpha), y.data(), numel); break;
      case OpKind::bias: {
        const auto& s = nodes_[n.a].value.shape;
        bias_fwd(a, b, y.data(), s[0], static_cast<int64_t>(s[1]) * s[2]);
        break;
      }
      case OpKind::conv2d: kern::serial::conv2d_forward(a, b, y.data(), n.conv); break;
      case OpKind::decimate: {
        const auto& s = nodes_[n.a].value.shape;
        decimate_fwd(a, y.data(), s[0], s[1], s[2], n.factor);
        break;
      }
      case OpKind::upsample2x: {
        const auto& s = nodes_[n.a].value.shape;
        upsample2x_fwd(a, y.data(), s[0], s[1], s[2]);
        break;
      }
      case OpKind::concat_ch: {
        const int64_t na2 = nodes_[n.a].value.numel();
        for (int64_t j = 0; j < na2; ++j) y[static_cast<size_t>(j)] = a[j];
        const int64_t nb2 = nodes_[n.b].value.numel();
        for (int64_t j = 0; j < nb2; ++j) y[static_cast<size_t>(na2 + j)] = b[j];
        break;
      }
      case OpKind::leaky_relu:
        lrelu_fwd(a, y.data(), numel, static_cast<double>(n.alpha));
        break;
      case OpKind::sigmoid: sigmoid_fwd(a, y.data(), numel); break;
      case OpKind::clip:
        clip_fwd(a, y.data(), numel, static_cast<double>(n.lo), static_cast<double>(n.hi));
        break;
      case OpKind::sum_squares: y[0] = sumsq(a, nodes_[n.a].value.numel()); break;
      case OpKind::radon: kern::serial::csr_matvec(*n.mat, a, y.data()); break;
    }
  }
  return vals[out][0];
}

}  // namespace trace
