#include "trace/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trace/rng.hpp"

namespace trace {
namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor replicate_depthwise(const Tensor& k2d, int channels) {
  const int k = k2d.shape[0];
  Tensor out({channels, 1, k, k});
  for (int c = 0; c < channels; ++c)
    for (int64_t i = 0; i < k2d.numel(); ++i) out.data[c * k2d.numel() + i] = k2d.data[i];
  return out;
}

Tensor normalize_unit_sum(Tensor k) {
  double s = 0.0;
  for (float v : k.data) s += v;
  if (s <= 0.0) throw std::runtime_error("kernel normalization: nonpositive sum");
  for (float& v : k.data) v = static_cast<float>(v / s);
  return k;
}

kern::Conv2dSpec dw_spec(const ForwardOperator& op) {
  kern::Conv2dSpec s;
  s.cin = op.in_shape[0];
  s.h = op.in_shape[1];
  s.w = op.in_shape[2];
  s.cout = s.cin;
  s.k = op.dw_kernel.shape[2];
  s.stride = 1;
  s.pad = op.pad;
  s.depthwise = true;
  return s;
}

Tensor conv_depthwise(const ForwardOperator& op, const Tensor& x) {
  Tensor y(x.shape);
  kern::conv2d_forward(x.data.data(), op.dw_kernel.data.data(), y.data.data(), dw_spec(op));
  return y;
}

Tensor decimate_eager(const Tensor& x, int f) {
  const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
  Tensor y({c, h / f, w / f});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < h / f; ++i)
      for (int j = 0; j < w / f; ++j)
        y.data[(static_cast<int64_t>(ci) * (h / f) + i) * (w / f) + j] =
            x.data[(static_cast<int64_t>(ci) * h + i * f) * w + static_cast<int64_t>(j) * f];
  return y;
}

Tensor zero_insert_eager(const Tensor& r, int f, int h, int w) {
  const int c = r.shape[0];
  Tensor y({c, h, w});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < r.shape[1]; ++i)
      for (int j = 0; j < r.shape[2]; ++j)
        y.data[(static_cast<int64_t>(ci) * h + i * f) * w + static_cast<int64_t>(j) * f] =
            r.data[(static_cast<int64_t>(ci) * r.shape[1] + i) * r.shape[2] + j];
  return y;
}

}  // namespace

Tensor ForwardOperator::apply_linear(const Tensor& x) const {
  if (x.shape != in_shape) throw std::invalid_argument("operator apply: input shape mismatch");
  switch (kind) {
    case OperatorKind::inpaint: {
      Tensor y(x.shape);
      for (int64_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] * mask.data[i];
      return y;
    }
    case OperatorKind::downsample: return decimate_eager(conv_depthwise(*this, x), factor);
    case OperatorKind::blur: return conv_depthwise(*this, x);
    case OperatorKind::radon: {
      Tensor y(out_shape);
      kern::csr_matvec(*sys, x.data.data(), y.data.data());
      return y;
    }
  }
  throw std::logic_error("operator apply: unknown kind");
}

Tensor ForwardOperator::apply(const Tensor& x) const {
  Tensor y = apply_linear(x);
  if (clip_output)
    for (float& v : y.data) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
  return y;
}

Tensor ForwardOperator::adjoint(const Tensor& r) const {
  if (r.shape != out_shape) throw std::invalid_argument("operator adjoint: shape mismatch");
  switch (kind) {
    case OperatorKind::inpaint: return apply_linear(r);
    case OperatorKind::downsample: {
      Tensor zr = zero_insert_eager(r, factor, in_shape[1], in_shape[2]);
      Tensor gx(in_shape);
      kern::conv2d_backward_input(zr.data.data(), dw_kernel.data.data(), gx.data.data(),
                                  dw_spec(*this));
      return gx;
    }
    case OperatorKind::blur: {
      Tensor gx(in_shape);
      kern::conv2d_backward_input(r.data.data(), dw_kernel.data.data(), gx.data.data(),
                                  dw_spec(*this));
      return gx;
    }
    case OperatorKind::radon: {
      Tensor x(in_shape);
      kern::csr_matvec(*sys_t, r.data.data(), x.data.data());
      return x;
    }
  }
  throw std::logic_error("operator adjoint: unknown kind");
}

int ForwardOperator::apply_graph(Graph& g, int x) const {
  if (g.value(x).shape != in_shape)
    throw std::invalid_argument("operator apply_graph: input shape mismatch");
  switch (kind) {
    case OperatorKind::inpaint: {
      int m = g.leaf(mask);
      return g.mul(x, m);
    }
    case OperatorKind::downsample: {
      int k = g.leaf(dw_kernel);
      int c = g.conv2d(x, k, pad, 1, true);
      return g.decimate(c, factor);
    }
    case OperatorKind::blur: {
      int k = g.leaf(dw_kernel);
      int c = g.conv2d(x, k, pad, 1, true);
      return clip_output ? g.clip(c, 0.f, 1.f) : c;
    }
    case OperatorKind::radon: return g.radon(x, sys.get(), sys_t.get(), out_shape);
  }
  throw std::logic_error("operator apply_graph: unknown kind");
}

ForwardOperator make_inpaint(int h, int w, double missing_fraction, uint64_t seed,
                             int channels) {
  if (missing_fraction <= 0.0 || missing_fraction >= 1.0)
    throw std::invalid_argument("make_inpaint: missing_fraction must be in (0,1)");
  ForwardOperator op;
  op.kind = OperatorKind::inpaint;
  op.linear = true;
  op.in_shape = {channels, h, w};
  op.out_shape = op.in_shape;
  const int64_t plane = static_cast<int64_t>(h) * w;
  const int64_t zeros = std::llround(missing_fraction * static_cast<double>(plane));
  Rng rng(seed);
  std::vector<int64_t> holes = rng.sample_without_replacement(plane, zeros);
  op.mask = Tensor({channels, h, w}, 1.f);
  for (int64_t p : holes)
    for (int c = 0; c < channels; ++c) op.mask.data[c * plane + p] = 0.f;
  return op;
}

ForwardOperator make_downsample(int factor, int h, int w, int channels) {
  if (factor != 2 && factor != 4) throw std::invalid_argument("make_downsample: factor must be 2 or 4");
  if (h % factor || w % factor)
    throw std::invalid_argument("make_downsample: extents must divide by factor");
  // Separable triangle of width 2f-1 with unit DC gain.
  const int k = 2 * factor - 1;
  Tensor k2d({k, k});
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double wi = factor - std::abs(i - (factor - 1));
      const double wj = factor - std::abs(j - (factor - 1));
      k2d.data[static_cast<int64_t>(i) * k + j] =
          static_cast<float>(wi * wj / (static_cast<double>(factor) * factor *
                                        static_cast<double>(factor) * factor));
    }
  ForwardOperator op;
  op.kind = OperatorKind::downsample;
  op.linear = true;
  op.in_shape = {channels, h, w};
  op.out_shape = {channels, h / factor, w / factor};
  op.dw_kernel = replicate_depthwise(k2d, channels);
  op.pad = PadMode::symmetric;
  op.factor = factor;
  return op;
}

Tensor make_motion_blur_kernel(int length, double angle_deg, int size) {
  if (length < 1 || size < 1 || size % 2 == 0)
    throw std::invalid_argument("motion blur kernel: bad length/size");
  Tensor k({size, size});
  const int c = size / 2;
  const double th = angle_deg * kPi / 180.0;
  const double dx = std::cos(th), dy = std::sin(th);
  const double t0 = -0.5 * (length - 1);
  for (int s = 0; s < length; ++s) {
    const double px = c + (t0 + s) * dx;
    const double py = c + (t0 + s) * dy;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    const double wgt[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx},
                              {fy * (1 - fx), fy * fx}};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const int yy = y0 + a, xx = x0 + b;
        if (yy < 0 || yy >= size || xx < 0 || xx >= size) continue;
        k.data[static_cast<int64_t>(yy) * size + xx] += static_cast<float>(wgt[a][b]);
      }
  }
  return normalize_unit_sum(std::move(k));
}

Tensor make_gaussian_kernel(double sigma_x, double sigma_y, double angle_deg, int size) {
  if (sigma_x <= 0 || sigma_y <= 0 || size < 1 || size % 2 == 0)
    throw std::invalid_argument("gaussian kernel: bad parameters");
  Tensor k({size, size});
  const int c = size / 2;
  const double th = angle_deg * kPi / 180.0;
  const double ct = std::cos(th), st = std::sin(th);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double ox = x - c, oy = y - c;
      const double xr = ox * ct + oy * st;
      const double yr = -ox * st + oy * ct;
      k.data[static_cast<int64_t>(y) * size + x] = static_cast<float>(
          std::exp(-0.5 * (xr * xr / (sigma_x * sigma_x) + yr * yr / (sigma_y * sigma_y))));
    }
  return normalize_unit_sum(std::move(k));
}

namespace {

ForwardOperator make_blur(Tensor k2d, int h, int w, int channels) {
  ForwardOperator op;
  op.kind = OperatorKind::blur;
  op.linear = false;
  op.clip_output = true;
  op.in_shape = {channels, h, w};
  op.out_shape = op.in_shape;
  op.dw_kernel = replicate_depthwise(k2d, channels);
  op.pad = PadMode::symmetric;
  return op;
}

}  // namespace

ForwardOperator make_motion_blur(int h, int w, int channels, int length) {
  return make_blur(make_motion_blur_kernel(length, 45.0, 21), h, w, channels);
}

ForwardOperator make_anisotropic_blur(int h, int w, int channels) {
  return make_blur(make_gaussian_kernel(3.0, 8.0, 30.0, 21), h, w, channels);
}

ForwardOperator make_radon(int n, std::vector<double> angles_deg, int num_detectors) {
  if (n < 2) throw std::invalid_argument("make_radon: image side must be >= 2");
  if (angles_deg.empty()) throw std::invalid_argument("make_radon: empty angle list");
  const int nd = num_detectors > 0
                     ? num_detectors
                     : static_cast<int>(std::ceil(std::sqrt(2.0) * static_cast<double>(n)));
  const int na = static_cast<int>(angles_deg.size());

  auto a = std::make_shared<kern::Csr>();
  a->rows = na * nd;
  a->cols = n * n;
  a->ptr.assign(static_cast<size_t>(a->rows) + 1, 0);

  // Each detector bin is covered by a small bundle of sub-rays marching
  // across the image at half-pixel steps; every sample deposits a bilinear
  // footprint onto the four surrounding pixel centers, weighted by the step
  // length. Pixel (r,c) sits at centered coordinates (c - mid, r - mid).
  // The sub-ray bundle box-filters the detector bin, which keeps profiles of
  // radially symmetric smooth images nearly angle-invariant.
  const double mid = 0.5 * (n - 1);
  const double det_mid = 0.5 * (nd - 1);
  const int tmax = static_cast<int>(std::ceil(std::sqrt(2.0) * 0.5 * n)) + 1;
  const double dt = 0.5;
  const int nsub = 4;
  std::vector<double> row_acc(static_cast<size_t>(n) * n);

  for (int ai = 0; ai < na; ++ai) {
    const double th = angles_deg[static_cast<size_t>(ai)] * kPi / 180.0;
    const double ux = std::cos(th), uy = std::sin(th);   // detector axis
    const double vx = -std::sin(th), vy = std::cos(th);  // ray direction
    for (int d = 0; d < nd; ++d) {
      std::fill(row_acc.begin(), row_acc.end(), 0.0);
      for (int sub = 0; sub < nsub; ++sub) {
        const double s = d - det_mid + (sub + 0.5) / nsub - 0.5;
        for (int ti = -2 * tmax; ti <= 2 * tmax; ++ti) {
          const double t = ti * dt;
          const double px = s * ux + t * vx + mid;  // column
          const double py = s * uy + t * vy + mid;  // row
          const int x0 = static_cast<int>(std::floor(px));
          const int y0 = static_cast<int>(std::floor(py));
          const double fx = px - x0, fy = py - y0;
          const double wgt[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx},
                                    {fy * (1 - fx), fy * fx}};
          for (int a2 = 0; a2 < 2; ++a2)
            for (int b2 = 0; b2 < 2; ++b2) {
              const int yy = y0 + a2, xx = x0 + b2;
              if (yy < 0 || yy >= n || xx < 0 || xx >= n) continue;
              row_acc[static_cast<size_t>(yy) * n + xx] += wgt[a2][b2] * (dt / nsub);
            }
        }
      }
      const int row = ai * nd + d;
      for (int p = 0; p < n * n; ++p)
        if (row_acc[static_cast<size_t>(p)] != 0.0) {
          a->idx.push_back(p);
          a->val.push_back(static_cast<float>(row_acc[static_cast<size_t>(p)]));
        }
      a->ptr[static_cast<size_t>(row) + 1] = static_cast<int64_t>(a->idx.size());
    }
  }

  ForwardOperator op;
  op.kind = OperatorKind::radon;
  op.linear = true;
  op.in_shape = {1, n, n};
  op.out_shape = {na, nd};
  op.sys = std::move(a);
  op.sys_t = std::make_shared<kern::Csr>(kern::transpose(*op.sys));
  op.angles = std::move(angles_deg);
  op.num_detectors = nd;
  return op;
}

double adjoint_check(const ForwardOperator& op, int trials, uint64_t seed) {
  double worst = 0.0;
  for (int tr = 0; tr < trials; ++tr) {
    Rng rng(mix_seed(seed, 0xadc0 + static_cast<uint64_t>(tr)));
    Tensor x(op.in_shape), y(op.out_shape);
    rng.fill_normal(x);
    rng.fill_normal(y);
    Tensor ax = op.apply_linear(x);
    Tensor aty = op.adjoint(y);
    const double lhs = dot(ax, y);
    const double rhs = dot(x, aty);
    const double denom = std::max(norm2(ax) * norm2(y), 1e-30);
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  return worst;
}

}  // namespace trace
