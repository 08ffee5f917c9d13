#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "trace/metrics.hpp"
#include "trace/rng.hpp"
#include "trace/tasks.hpp"

using namespace trace;
using testutil::bitwise_equal;

TEST_CASE("psnr") {
  Tensor a = synthetic_piecewise(16, 1);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0);

  Tensor zeros({1, 16, 16});
  Tensor ones({1, 16, 16}, 1.f);
  CHECK(psnr(zeros, ones) == doctest::Approx(0.0).epsilon(1e-12));

  Tensor b = synthetic_piecewise(16, 2);
  double mse = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double e = double(a.data[i]) - b.data[i];
    mse += e * e;
  }
  mse /= static_cast<double>(a.numel());
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-9));
  CHECK(psnr(a, b) == psnr(b, a));

  // strictly decreasing with perturbation magnitude
  Tensor ref({1, 16, 16}, 0.5f);
  Tensor pat({1, 16, 16});
  Rng rng(7);
  rng.fill_uniform(pat, -1.f, 1.f);
  double prev = std::numeric_limits<double>::infinity();
  for (double mag : {0.05, 0.2, 0.4}) {
    Tensor x = ref;
    for (int64_t i = 0; i < x.numel(); ++i)
      x.data[i] += static_cast<float>(mag) * pat.data[i];
    const double p = psnr(x, ref);
    CHECK(p < prev);
    prev = p;
  }

  CHECK_THROWS(psnr(a, Tensor({1, 8, 8})));
}

TEST_CASE("ssim") {
  Tensor a = synthetic_piecewise(16, 3);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  // constant pair: variance terms vanish, closed form survives
  Tensor c5({1, 16, 16}, 0.5f);
  Tensor c6({1, 16, 16}, 0.6f);
  const double c1 = 1e-4, c2 = 9e-4;
  const double expect = ((2 * 0.5 * 0.6 + c1) * c2) / ((0.25 + 0.36 + c1) * c2);
  CHECK(expect == doctest::Approx(0.6001 / 0.6101).epsilon(1e-12));
  CHECK(ssim(c5, c6) == doctest::Approx(expect).epsilon(1e-6));
  CHECK(ssim(c5, c6) == ssim(c6, c5));

  // inverted zero-mean pattern: structure term goes negative
  Tensor cb({1, 16, 16});
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) cb.data[static_cast<size_t>(i) * 16 + j] = float((i + j) % 2);
  Tensor inv = cb;
  for (float& v : inv.data) v = 1.f - v;
  CHECK(ssim(cb, inv) < 0.0);

  // multichannel is the channel mean
  Tensor rgb({3, 16, 16});
  Rng rng(9);
  rng.fill_uniform(rgb, 0.f, 1.f);
  CHECK(ssim(rgb, rgb) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS(ssim(Tensor({1, 6, 6}), Tensor({1, 6, 6})));
  CHECK_NOTHROW(ssim(Tensor({1, 7, 7}), Tensor({1, 7, 7})));
  CHECK_THROWS(ssim(a, Tensor({1, 8, 8})));
}

namespace {

// independent membership evaluation of the mirrored 10-ellipse table
double phantom_value_at(double x, double y) {
  struct E { double a, ax, ay, x0, y0, phi; };
  const E tab[10] = {
      {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0},
      {-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0},
      {-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18},
      {-0.20, 0.1100, 0.3100, -0.22, 0.0000, 18},
      {0.10, 0.2100, 0.2500, 0.00, 0.3500, 0},
      {0.10, 0.0460, 0.0460, 0.00, 0.1000, 0},
      {0.10, 0.0460, 0.0460, 0.00, -0.1000, 0},
      {0.10, 0.0460, 0.0230, -0.07, -0.6050, 0},
      {0.10, 0.0230, 0.0230, 0.00, -0.6060, 0},
      {0.10, 0.0460, 0.0230, 0.07, -0.6050, 0},
  };
  double v = 0;
  for (const E& e : tab) {
    const double th = e.phi * M_PI / 180.0;
    const double dx = x - e.x0, dy = y - e.y0;
    const double xr = dx * std::cos(th) + dy * std::sin(th);
    const double yr = -dx * std::sin(th) + dy * std::cos(th);
    if (xr * xr / (e.ax * e.ax) + yr * yr / (e.ay * e.ay) <= 1.0) v += e.a;
  }
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

TEST_CASE("head phantom") {
  const int n = 64;
  Tensor ph = shepp_logan(n);
  CHECK(ph.shape == std::vector<int>{1, n, n});
  for (float v : ph.data) {
    CHECK(v >= 0.f);
    CHECK(v <= 1.f);
  }
  CHECK(ph.data[0] == 0.f);
  CHECK(ph.data[n - 1] == 0.f);
  CHECK(ph.data[static_cast<size_t>(n) * n - 1] == 0.f);

  // spot-check pixels against an independent membership evaluation
  for (auto [i, j] : std::vector<std::pair<int, int>>{
           {31, 31}, {32, 32}, {8, 32}, {50, 20}, {16, 48}}) {
    const double x = (2.0 * (j + 0.5) - n) / n;
    const double y = -(2.0 * (i + 0.5) - n) / n;
    CHECK(ph.data[static_cast<size_t>(i) * n + j] ==
          doctest::Approx(phantom_value_at(x, y)).epsilon(1e-6));
  }
  CHECK(ph.data[31 * 64 + 31] == doctest::Approx(0.2).epsilon(1e-6));

  // mirrored construction is left-right symmetric pixel for pixel
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n / 2; ++j)
      CHECK(ph.data[static_cast<size_t>(i) * n + j] ==
            ph.data[static_cast<size_t>(i) * n + (n - 1 - j)]);

  CHECK_THROWS(shepp_logan(15));
  CHECK_NOTHROW(shepp_logan(16));
}

TEST_CASE("synthetic ground truth") {
  Tensor a = synthetic_piecewise(32, 5);
  Tensor b = synthetic_piecewise(32, 5);
  Tensor c = synthetic_piecewise(32, 6);
  CHECK(bitwise_equal(a, b));
  CHECK(!bitwise_equal(a, c));
  for (float v : a.data) {
    CHECK(v >= 0.f);
    CHECK(v <= 1.f);
  }
  CHECK(synthetic_piecewise(32, 5, 3).shape == std::vector<int>{3, 32, 32});
  CHECK_THROWS(synthetic_piecewise(7, 0));
}

TEST_CASE("normalization to the unit interval") {
  Tensor t({1, 2, 2});
  t.data = {2.f, 4.f, 6.f, 10.f};
  Tensor nm = normalize_minmax(t);
  CHECK(nm.data[0] == 0.f);
  CHECK(nm.data[3] == 1.f);
  CHECK(nm.data[1] == doctest::Approx(0.25).epsilon(1e-6));

  Tensor flat({1, 2, 2}, 3.f);
  Tensor nf = normalize_minmax(flat);
  for (float v : nf.data) CHECK(v == 0.f);
}

TEST_CASE("task catalogue maps to the right operators") {
  TaskSpec t;
  t.seed = 11;

  t.kind = TaskKind::inpaint50;
  ForwardOperator op = make_task_operator(t, 1, 16, 16);
  int zeros = 0;
  for (float v : op.mask.data) zeros += v == 0.f;
  CHECK(zeros == 128);

  t.kind = TaskKind::inpaint70;
  op = make_task_operator(t, 1, 20, 20);
  zeros = 0;
  for (float v : op.mask.data) zeros += v == 0.f;
  CHECK(zeros == 280);

  t.missing_fraction = 0.25;  // override wins over the kind default
  op = make_task_operator(t, 1, 16, 16);
  zeros = 0;
  for (float v : op.mask.data) zeros += v == 0.f;
  CHECK(zeros == 64);
  t.missing_fraction = 0.0;

  t.kind = TaskKind::sr2;
  CHECK(make_task_operator(t, 1, 16, 16).out_shape == std::vector<int>{1, 8, 8});
  t.kind = TaskKind::sr4;
  CHECK(make_task_operator(t, 1, 16, 16).out_shape == std::vector<int>{1, 4, 4});

  t.kind = TaskKind::motion;
  op = make_task_operator(t, 1, 32, 32);
  CHECK(op.clip_output);
  CHECK(op.dw_kernel.shape == std::vector<int>{1, 1, 21, 21});

  t.kind = TaskKind::nonlinear;
  CHECK(!make_task_operator(t, 1, 32, 32).linear);

  t.kind = TaskKind::ct_sparse;
  op = make_task_operator(t, 1, 32, 32);
  REQUIRE(op.angles.size() == 60);
  for (int i = 0; i < 60; ++i) CHECK(op.angles[static_cast<size_t>(i)] == i * 3.0);
  t.views = 30;
  op = make_task_operator(t, 1, 32, 32);
  REQUIRE(op.angles.size() == 30);
  CHECK(op.angles[1] == 6.0);
  t.views = 0;

  t.kind = TaskKind::ct_limited;
  op = make_task_operator(t, 1, 32, 32);
  REQUIRE(op.angles.size() == 120);
  for (int i = 0; i < 120; ++i) CHECK(op.angles[static_cast<size_t>(i)] == i * 1.0);

  CHECK_THROWS(make_task_operator(t, 3, 32, 32));   // CT wants one channel
  CHECK_THROWS(make_task_operator(t, 1, 32, 48));   // and square extents
}

TEST_CASE("degradation wiring") {
  Tensor gt = synthetic_piecewise(16, 21);
  TaskSpec t;
  t.kind = TaskKind::inpaint50;
  t.seed = 13;
  Degraded d = degrade(t, gt);
  for (int64_t i = 0; i < gt.numel(); ++i) {
    if (d.op.mask.data[i] == 1.f)
      CHECK(d.y.data[i] == gt.data[i]);
    else
      CHECK(d.y.data[i] == 0.f);
  }

  Degraded d2 = degrade(t, gt);
  CHECK(bitwise_equal(d.y, d2.y));
  CHECK(bitwise_equal(d.op.mask, d2.op.mask));

  Tensor bad = gt;
  bad.data[0] = 1.5f;
  CHECK_THROWS(degrade(t, bad));
  CHECK_THROWS(degrade(t, Tensor({16, 16})));

  t.kind = TaskKind::ct_sparse;
  t.views = 10;
  Degraded ct = degrade(t, shepp_logan(32));
  CHECK(ct.y.shape == std::vector<int>{10, ct.op.num_detectors});
}
