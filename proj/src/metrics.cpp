#include "trace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trace/rng.hpp"

namespace trace {

double psnr(const Tensor& x, const Tensor& ref) {
  require_same_shape(x, ref, "psnr");
  const int64_t n = x.numel();
  double se = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x.data[i]) - static_cast<double>(ref.data[i]);
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(n) / se);
}

double ssim(const Tensor& x, const Tensor& ref) {
  require_same_shape(x, ref, "ssim");
  if (x.shape.size() != 3) throw std::invalid_argument("ssim: expected [C,H,W]");
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  constexpr int win = 7;
  if (h < win || w < win) throw std::invalid_argument("ssim: image smaller than window");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  double total = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    const float* xa = x.data.data() + static_cast<int64_t>(ch) * h * w;
    const float* ra = ref.data.data() + static_cast<int64_t>(ch) * h * w;
    double acc = 0.0;
    int64_t windows = 0;
    for (int i = 0; i + win <= h; ++i)
      for (int j = 0; j + win <= w; ++j) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int u = 0; u < win; ++u)
          for (int v = 0; v < win; ++v) {
            const double a = xa[static_cast<int64_t>(i + u) * w + (j + v)];
            const double b = ra[static_cast<int64_t>(i + u) * w + (j + v)];
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
          }
        constexpr double m = win * win;
        const double mx = sx / m, my = sy / m;
        const double vx = sxx / m - mx * mx;
        const double vy = syy / m - my * my;
        const double cov = sxy / m - mx * my;
        acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++windows;
      }
    total += acc / static_cast<double>(windows);
  }
  return total / c;
}

namespace {

struct Ellipse {
  double a;  // intensity increment
  double ax, ay, x0, y0, phi_deg;
};

// Left-right symmetric variant: the classic off-axis ellipses are paired as
// exact mirror images so the phantom is symmetric in the continuum.
constexpr Ellipse kPhantom[10] = {
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

}  // namespace

Tensor shepp_logan(int n) {
  if (n < 16) throw std::invalid_argument("shepp_logan: n must be >= 16");
  Tensor img({1, n, n});
  constexpr double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    const double y = -(2.0 * (i + 0.5) - n) / n;
    for (int j = 0; j < n; ++j) {
      const double x = (2.0 * (j + 0.5) - n) / n;
      double v = 0.0;
      for (const Ellipse& e : kPhantom) {
        const double th = e.phi_deg * pi / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = dx * std::cos(th) + dy * std::sin(th);
        const double yr = -dx * std::sin(th) + dy * std::cos(th);
        if (xr * xr / (e.ax * e.ax) + yr * yr / (e.ay * e.ay) <= 1.0) v += e.a;
      }
      img.data[static_cast<int64_t>(i) * n + j] =
          static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return img;
}

Tensor synthetic_piecewise(int n, uint64_t seed, int channels) {
  if (n < 8) throw std::invalid_argument("synthetic_piecewise: n must be >= 8");
  Rng rng(mix_seed(seed, 0x5157));
  const double gx = rng.uniform(-0.25, 0.25), gy = rng.uniform(-0.25, 0.25);
  const double base = rng.uniform(0.3, 0.6);

  std::vector<float> plane(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = (j + 0.5) / n - 0.5, v = (i + 0.5) / n - 0.5;
      plane[static_cast<size_t>(i) * n + j] = static_cast<float>(base + gx * u + gy * v);
    }

  const int discs = 3 + static_cast<int>(rng.next_u64() % 3);  // 3..5 shapes
  for (int s = 0; s < discs; ++s) {
    const double cx = rng.uniform(0.15, 0.85) * n, cy = rng.uniform(0.15, 0.85) * n;
    const double r = rng.uniform(0.08, 0.22) * n;
    const double level = rng.uniform(0.1, 0.9);
    const double shade = rng.uniform(-0.15, 0.15);
    const bool rect = (rng.next_u64() & 1) != 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double dx = j + 0.5 - cx, dy = i + 0.5 - cy;
        const bool inside =
            rect ? (std::abs(dx) <= r && std::abs(dy) <= 0.7 * r) : (dx * dx + dy * dy <= r * r);
        if (inside)
          plane[static_cast<size_t>(i) * n + j] =
              static_cast<float>(level + shade * (dx * dx + dy * dy) / (r * r));
      }
  }
  for (float& v : plane) v = std::clamp(v, 0.f, 1.f);

  Tensor img({channels, n, n});
  for (int c = 0; c < channels; ++c) {
    const float tint = c == 0 ? 0.f : (c == 1 ? 0.05f : -0.05f);
    for (size_t i = 0; i < plane.size(); ++i)
      img.data[static_cast<size_t>(c) * plane.size() + i] =
          std::clamp(plane[i] + tint, 0.f, 1.f);
  }
  return img;
}

Tensor normalize_minmax(const Tensor& x) {
  float lo = x.data[0], hi = x.data[0];
  for (float v : x.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor y(x.shape);
  if (hi > lo) {
    const float s = 1.f / (hi - lo);
    for (int64_t i = 0; i < x.numel(); ++i) y.data[i] = (x.data[i] - lo) * s;
  }
  return y;
}

}  // namespace trace
