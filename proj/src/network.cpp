#include "trace/network.hpp"

#include <cmath>
#include <stdexcept>

#include "trace/rng.hpp"

namespace trace {
namespace {

void check_arch(const ArchConfig& a) {
  if (a.depth < 1 || a.width < 1 || a.kernel < 1 || a.kernel % 2 == 0)
    throw std::invalid_argument("network: bad architecture");
  if (a.cin < 1 || a.cout < 1) throw std::invalid_argument("network: bad channel counts");
}

void check_extents(const ArchConfig& a, int h, int w) {
  const int div = 1 << a.depth;
  if (h % div || w % div)
    throw std::invalid_argument("network: input extents must divide by 2^depth");
}

Tensor kaiming_uniform(Rng& rng, std::vector<int> shape, int fan_in) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  rng.fill_uniform(t, -bound, bound);
  return t;
}

}  // namespace

int64_t param_count(const ArchConfig& a) {
  check_arch(a);
  const int64_t k2 = static_cast<int64_t>(a.kernel) * a.kernel;
  const int64_t w = a.width;
  int64_t n = w * a.cin * k2 + w;                    // stem
  n += a.depth * (w * w * k2 + w);                   // encoders
  n += a.depth * (w * 2 * w * k2 + w);               // decoders
  n += static_cast<int64_t>(a.cout) * w + a.cout;    // head
  return n;
}

NetworkParams init_network(const ArchConfig& a, uint64_t seed) {
  check_arch(a);
  NetworkParams p;
  p.arch = a;
  p.seed = seed;
  Rng rng(seed);
  const int k = a.kernel, w = a.width;
  auto layer = [&](int cout, int cin, int ksize) {
    p.kernels.push_back(kaiming_uniform(rng, {cout, cin, ksize, ksize}, cin * ksize * ksize));
    p.biases.push_back(Tensor({cout}));
  };
  layer(w, a.cin, k);
  for (int i = 0; i < a.depth; ++i) layer(w, w, k);
  for (int i = 0; i < a.depth; ++i) layer(w, 2 * w, k);
  layer(a.cout, w, 1);
  return p;
}

NetGraph build_net_graph(Graph& g, const NetworkParams& p, int h, int w) {
  const ArchConfig& a = p.arch;
  check_arch(a);
  check_extents(a, h, w);
  if (p.kernels.size() != static_cast<size_t>(2 * a.depth + 2))
    throw std::invalid_argument("network: wrong number of layers");

  NetGraph net;
  net.input = g.leaf(Tensor({a.cin, h, w}));
  for (size_t i = 0; i < p.kernels.size(); ++i) {
    net.kernel_ids.push_back(g.leaf(p.kernels[i], true));
    net.bias_ids.push_back(g.leaf(p.biases[i], true));
  }

  int li = 0;
  auto conv_block = [&](int x, int stride, bool act) {
    int c = g.conv2d(x, net.kernel_ids[li], PadMode::zero, stride);
    int b = g.bias(c, net.bias_ids[li]);
    ++li;
    return act ? g.leaky_relu(b, 0.1f) : b;
  };

  std::vector<int> skips;
  int cur = conv_block(net.input, 1, true);
  for (int i = 0; i < a.depth; ++i) {
    skips.push_back(cur);
    cur = conv_block(cur, 2, true);
  }
  for (int i = a.depth - 1; i >= 0; --i) {
    int up = g.upsample2x(cur);
    int cat = g.concat_ch(up, skips[static_cast<size_t>(i)]);
    cur = conv_block(cat, 1, true);
  }
  net.output = g.sigmoid(conv_block(cur, 1, false));

  net.params = net.kernel_ids;
  net.params.insert(net.params.end(), net.bias_ids.begin(), net.bias_ids.end());
  return net;
}

void load_params(Graph& g, const NetGraph& net, const NetworkParams& p) {
  for (size_t i = 0; i < net.kernel_ids.size(); ++i) {
    g.value(net.kernel_ids[i]).data = p.kernels[i].data;
    g.value(net.bias_ids[i]).data = p.biases[i].data;
  }
}

NetworkParams extract_params(const Graph& g, const NetGraph& net, const ArchConfig& arch,
                             uint64_t seed) {
  NetworkParams p;
  p.arch = arch;
  p.seed = seed;
  for (size_t i = 0; i < net.kernel_ids.size(); ++i) {
    p.kernels.push_back(g.value(net.kernel_ids[i]));
    p.biases.push_back(g.value(net.bias_ids[i]));
  }
  return p;
}

Tensor forward_net(const NetworkParams& p, const Tensor& input) {
  if (input.shape.size() != 3 || input.shape[0] != p.arch.cin)
    throw std::invalid_argument("forward_net: expected [cin,H,W] input");
  Graph g;
  NetGraph net = build_net_graph(g, p, input.shape[1], input.shape[2]);
  g.value(net.input) = input;
  g.forward();
  return g.value(net.output);
}

}  // namespace trace
