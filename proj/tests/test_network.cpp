#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "trace/grad_check.hpp"
#include "trace/network.hpp"
#include "trace/rng.hpp"

using namespace trace;
using testutil::bitwise_equal;
using testutil::random_tensor;

namespace {

int64_t count_formula(const ArchConfig& a) {
  const int64_t k2 = static_cast<int64_t>(a.kernel) * a.kernel;
  const int64_t w = a.width;
  int64_t n = w * a.cin * k2 + w;                     // stem
  n += a.depth * (w * w * k2 + w);                    // encoders
  n += a.depth * (w * (2 * w) * k2 + w);              // decoders eat skip concat
  n += static_cast<int64_t>(a.cout) * w * 1 + a.cout; // 1x1 head
  return n;
}

}  // namespace

TEST_CASE("parameter count") {
  CHECK(param_count(ArchConfig{}) == 21009);
  for (ArchConfig a : {ArchConfig{2, 8, 3, 1, 1}, ArchConfig{3, 16, 3, 3, 3},
                       ArchConfig{1, 4, 5, 1, 1}, ArchConfig{4, 12, 3, 1, 1}}) {
    NetworkParams p = init_network(a, 0);
    int64_t actual = 0;
    for (const Tensor& t : p.kernels) actual += t.numel();
    for (const Tensor& t : p.biases) actual += t.numel();
    CHECK(param_count(a) == count_formula(a));
    CHECK(actual == param_count(a));
  }
}

TEST_CASE("initialization is seeded and bounded") {
  ArchConfig a{2, 8, 3, 1, 1};
  NetworkParams p1 = init_network(a, 42);
  NetworkParams p2 = init_network(a, 42);
  NetworkParams p3 = init_network(a, 43);
  REQUIRE(p1.kernels.size() == p2.kernels.size());
  for (size_t i = 0; i < p1.kernels.size(); ++i)
    CHECK(bitwise_equal(p1.kernels[i], p2.kernels[i]));
  bool any_diff = false;
  for (size_t i = 0; i < p1.kernels.size(); ++i)
    any_diff = any_diff || !bitwise_equal(p1.kernels[i], p3.kernels[i]);
  CHECK(any_diff);

  for (const Tensor& k : p1.kernels) {
    const int cin_eff = k.shape[1];  // {cout, cin, kh, kw}
    const double bound = std::sqrt(6.0 / (cin_eff * k.shape[2] * k.shape[3]));
    for (float v : k.data) {
      CHECK(std::fabs(v) <= bound);
      CHECK(std::isfinite(v));
    }
  }
  for (const Tensor& b : p1.biases)
    for (float v : b.data) CHECK(v == 0.f);
}

TEST_CASE("forward pass shape and open-interval range") {
  ArchConfig a{2, 8, 3, 1, 1};
  NetworkParams p = init_network(a, 7);
  Tensor z = random_tensor({1, 16, 16}, 3, 0.f, 0.1f);
  Tensor out = forward_net(p, z);
  CHECK(out.shape == std::vector<int>{1, 16, 16});
  for (float v : out.data) {
    CHECK(v > 0.f);
    CHECK(v < 1.f);
  }

  ArchConfig rgb{2, 8, 3, 3, 3};
  Tensor z3 = random_tensor({3, 32, 32}, 4, 0.f, 0.1f);
  Tensor out3 = forward_net(init_network(rgb, 9), z3);
  CHECK(out3.shape == std::vector<int>{3, 32, 32});
}

TEST_CASE("forward pass rejects extents the downsampling chain cannot split") {
  ArchConfig a{3, 4, 3, 1, 1};  // three stride-2 stages
  NetworkParams p = init_network(a, 1);
  CHECK_THROWS(forward_net(p, Tensor({1, 12, 12})));  // 12 -> 6 -> 3 -> x
  CHECK_NOTHROW(forward_net(p, Tensor({1, 16, 16})));
  CHECK_THROWS(forward_net(p, Tensor({3, 16, 16})));  // channel mismatch
}

TEST_CASE("deterministic forward and distinct seeds give distinct outputs") {
  ArchConfig a{2, 4, 3, 1, 1};
  Tensor z = random_tensor({1, 8, 8}, 11, 0.f, 0.1f);
  Tensor o1 = forward_net(init_network(a, 5), z);
  Tensor o2 = forward_net(init_network(a, 5), z);
  Tensor o3 = forward_net(init_network(a, 6), z);
  CHECK(bitwise_equal(o1, o2));
  CHECK(!bitwise_equal(o1, o3));
}

TEST_CASE("graph round trip: load and extract preserve parameters") {
  ArchConfig a{2, 4, 3, 1, 1};
  NetworkParams p = init_network(a, 17);
  Graph g;
  NetGraph net = build_net_graph(g, p, 8, 8);
  CHECK(net.params.size() == net.kernel_ids.size() + net.bias_ids.size());
  NetworkParams back = extract_params(g, net, a, 17);
  REQUIRE(back.kernels.size() == p.kernels.size());
  for (size_t i = 0; i < p.kernels.size(); ++i)
    CHECK(bitwise_equal(back.kernels[i], p.kernels[i]));
  for (size_t i = 0; i < p.biases.size(); ++i)
    CHECK(bitwise_equal(back.biases[i], p.biases[i]));

  // perturb in place, reload the originals, rerun
  g.value(net.params[0]).data[0] += 1.f;
  load_params(g, net, p);
  CHECK(bitwise_equal(g.value(net.params[0]), p.kernels[0]));
}

TEST_CASE("graph evaluation matches the convenience forward") {
  ArchConfig a{2, 4, 3, 1, 1};
  NetworkParams p = init_network(a, 23);
  Tensor z = random_tensor({1, 8, 8}, 29, 0.f, 0.1f);
  Graph g;
  NetGraph net = build_net_graph(g, p, 8, 8);
  g.value(net.input) = z;
  g.forward();
  CHECK(bitwise_equal(g.value(net.output), forward_net(p, z)));
}

// Instance picked so no leaky-relu pre-activation sits within the FD stencil
// of its kink (verified clean for h in [5e-5, 2e-4]); a secant straddling the
// slope change would report a spurious mismatch.
TEST_CASE("analytic gradients through the whole network") {
  ArchConfig a{2, 4, 3, 1, 1};
  NetworkParams p = init_network(a, 12);
  Graph g;
  NetGraph net = build_net_graph(g, p, 8, 8);
  Rng rz(112);
  rz.fill_uniform(g.value(net.input), 0.f, 0.1f);
  int loss = g.sum_squares(net.output);
  GradCheckResult r = finite_difference_check(g, loss, net.params, 1e-4, 1, 1 << 20);
  CHECK(r.max_rel_err <= 1e-4);
  CHECK(r.coords_checked == param_count(a));
}
