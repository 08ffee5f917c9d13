#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "trace/parallel.hpp"

// Low-level compute kernels, templated on scalar type (float for model math,
// double for the verification replays). Each kernel exists twice: a plain
// serial reference under kern::serial and an OpenMP version under kern::par
// that parallelizes over disjoint output elements. Per-element accumulation
// order is identical in both, so the two paths agree bitwise; tests assert
// this and the bench tool compares their throughput.

namespace trace {

enum class PadMode { zero, reflect, symmetric };

namespace kern {

struct Conv2dSpec {
  int cin = 1, h = 1, w = 1;  // input  [cin, h, w]
  int cout = 1, k = 1;        // kernel [cout, cin, k, k] ([c, 1, k, k] if depthwise)
  int stride = 1;
  PadMode pad = PadMode::zero;
  bool depthwise = false;

  int margin() const { return (k - 1) / 2; }
  int out_h() const { return (h + stride - 1) / stride; }
  int out_w() const { return (w + stride - 1) / stride; }
  void validate() const {
    if (k <= 0 || k % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd");
    if (stride != 1 && stride != 2) throw std::invalid_argument("conv2d: stride must be 1 or 2");
    if (depthwise && cout != cin)
      throw std::invalid_argument("conv2d: depthwise requires cout == cin");
    int m = margin();
    if (pad == PadMode::reflect && m > h - 1)
      throw std::invalid_argument("conv2d: reflect padding wider than image");
    if (pad == PadMode::symmetric && (m > h || m > w))
      throw std::invalid_argument("conv2d: symmetric padding wider than image");
  }
};

// Source index in [0,n) for padded coordinate p in [-m, n+m); -1 means the
// zero-padding region.
inline int pad_src_index(int p, int n, PadMode mode) {
  if (p >= 0 && p < n) return p;
  switch (mode) {
    case PadMode::zero: return -1;
    case PadMode::reflect: return p < 0 ? -p : 2 * n - 2 - p;
    case PadMode::symmetric: return p < 0 ? -1 - p : 2 * n - 1 - p;
  }
  return -1;
}

template <class T>
void pad_image(const T* x, T* padded, int c, int h, int w, int m, PadMode mode) {
  const int ph = h + 2 * m, pw = w + 2 * m;
  for (int ci = 0; ci < c; ++ci) {
    const T* xc = x + static_cast<int64_t>(ci) * h * w;
    T* pc = padded + static_cast<int64_t>(ci) * ph * pw;
    for (int py = 0; py < ph; ++py) {
      int sy = pad_src_index(py - m, h, mode);
      for (int px = 0; px < pw; ++px) {
        int sx = pad_src_index(px - m, w, mode);
        pc[static_cast<int64_t>(py) * pw + px] =
            (sy < 0 || sx < 0) ? T(0) : xc[static_cast<int64_t>(sy) * w + sx];
      }
    }
  }
}

namespace detail {

template <class T>
inline T conv_out_element(const T* padded, const T* kw, const Conv2dSpec& s, int pw,
                          int64_t plane, int co, int oy, int ox) {
  const int m2 = s.k * s.k;
  T acc = T(0);
  if (s.depthwise) {
    const T* pc = padded + static_cast<int64_t>(co) * plane;
    const T* kc = kw + static_cast<int64_t>(co) * m2;
    for (int u = 0; u < s.k; ++u) {
      const T* prow = pc + static_cast<int64_t>(oy * s.stride + u) * pw + ox * s.stride;
      const T* krow = kc + u * s.k;
      for (int v = 0; v < s.k; ++v) acc += prow[v] * krow[v];
    }
  } else {
    for (int ci = 0; ci < s.cin; ++ci) {
      const T* pc = padded + static_cast<int64_t>(ci) * plane;
      const T* kc = kw + (static_cast<int64_t>(co) * s.cin + ci) * m2;
      for (int u = 0; u < s.k; ++u) {
        const T* prow = pc + static_cast<int64_t>(oy * s.stride + u) * pw + ox * s.stride;
        const T* krow = kc + u * s.k;
        for (int v = 0; v < s.k; ++v) acc += prow[v] * krow[v];
      }
    }
  }
  return acc;
}

// Gradient w.r.t. one padded-input element (gather form, no races).
template <class T>
inline T conv_pad_grad_element(const T* gy, const T* kw, const Conv2dSpec& s, int oh,
                               int ow, int ci, int py, int px) {
  const int m2 = s.k * s.k;
  T acc = T(0);
  const int co_lo = s.depthwise ? ci : 0;
  const int co_hi = s.depthwise ? ci + 1 : s.cout;
  for (int co = co_lo; co < co_hi; ++co) {
    const T* gc = gy + static_cast<int64_t>(co) * oh * ow;
    const T* kc = s.depthwise ? kw + static_cast<int64_t>(co) * m2
                              : kw + (static_cast<int64_t>(co) * s.cin + ci) * m2;
    for (int u = 0; u < s.k; ++u) {
      int ny = py - u;
      if (ny < 0 || ny % s.stride) continue;
      int oy = ny / s.stride;
      if (oy >= oh) continue;
      for (int v = 0; v < s.k; ++v) {
        int nx = px - v;
        if (nx < 0 || nx % s.stride) continue;
        int ox = nx / s.stride;
        if (ox >= ow) continue;
        acc += gc[static_cast<int64_t>(oy) * ow + ox] * kc[u * s.k + v];
      }
    }
  }
  return acc;
}

template <class T>
inline T conv_kernel_grad_element(const T* gy, const T* padded, const Conv2dSpec& s,
                                  int oh, int ow, int pw, int64_t plane, int co, int ci,
                                  int u, int v) {
  const T* gc = gy + static_cast<int64_t>(co) * oh * ow;
  const T* pc = padded + static_cast<int64_t>(ci) * plane;
  T acc = T(0);
  for (int oy = 0; oy < oh; ++oy) {
    const T* prow = pc + static_cast<int64_t>(oy * s.stride + u) * pw + v;
    const T* grow = gc + static_cast<int64_t>(oy) * ow;
    for (int ox = 0; ox < ow; ++ox) acc += grow[ox] * prow[ox * s.stride];
  }
  return acc;
}

// Fold padded-space gradients back onto the interior. Serial by design:
// mirror targets overlap, and the fixed row-major order keeps results
// reproducible.
template <class T>
void fold_pad_grad(const T* gpad, T* gx, int c, int h, int w, int m, PadMode mode) {
  const int ph = h + 2 * m, pw = w + 2 * m;
  for (int ci = 0; ci < c; ++ci) {
    const T* pc = gpad + static_cast<int64_t>(ci) * ph * pw;
    T* xc = gx + static_cast<int64_t>(ci) * h * w;
    for (int py = 0; py < ph; ++py) {
      int sy = pad_src_index(py - m, h, mode);
      if (sy < 0) continue;
      for (int px = 0; px < pw; ++px) {
        int sx = pad_src_index(px - m, w, mode);
        if (sx < 0) continue;
        xc[static_cast<int64_t>(sy) * w + sx] += pc[static_cast<int64_t>(py) * pw + px];
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------- serial --

namespace serial {

template <class T>
void conv2d_forward(const T* x, const T* kw, T* y, const Conv2dSpec& s) {
  s.validate();
  const int m = s.margin(), ph = s.h + 2 * m, pw = s.w + 2 * m;
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<T> padded(static_cast<size_t>(s.cin) * ph * pw);
  pad_image(x, padded.data(), s.cin, s.h, s.w, m, s.pad);
  const int64_t plane = static_cast<int64_t>(ph) * pw;
  for (int co = 0; co < s.cout; ++co)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        y[(static_cast<int64_t>(co) * oh + oy) * ow + ox] =
            detail::conv_out_element(padded.data(), kw, s, pw, plane, co, oy, ox);
}

// gx is accumulated into (+=): callers zero it when starting a fresh pass.
template <class T>
void conv2d_backward_input(const T* gy, const T* kw, T* gx, const Conv2dSpec& s) {
  const int m = s.margin(), ph = s.h + 2 * m, pw = s.w + 2 * m;
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<T> gpad(static_cast<size_t>(s.cin) * ph * pw);
  for (int ci = 0; ci < s.cin; ++ci)
    for (int py = 0; py < ph; ++py)
      for (int px = 0; px < pw; ++px)
        gpad[(static_cast<int64_t>(ci) * ph + py) * pw + px] =
            detail::conv_pad_grad_element(gy, kw, s, oh, ow, ci, py, px);
  detail::fold_pad_grad(gpad.data(), gx, s.cin, s.h, s.w, m, s.pad);
}

template <class T>
void conv2d_backward_kernel(const T* gy, const T* x, T* gkw, const Conv2dSpec& s) {
  const int m = s.margin(), ph = s.h + 2 * m, pw = s.w + 2 * m;
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<T> padded(static_cast<size_t>(s.cin) * ph * pw);
  pad_image(x, padded.data(), s.cin, s.h, s.w, m, s.pad);
  const int64_t plane = static_cast<int64_t>(ph) * pw;
  const int m2 = s.k * s.k;
  if (s.depthwise) {
    for (int co = 0; co < s.cout; ++co)
      for (int u = 0; u < s.k; ++u)
        for (int v = 0; v < s.k; ++v)
          gkw[static_cast<int64_t>(co) * m2 + u * s.k + v] +=
              detail::conv_kernel_grad_element(gy, padded.data(), s, oh, ow, pw, plane,
                                               co, co, u, v);
  } else {
    for (int co = 0; co < s.cout; ++co)
      for (int ci = 0; ci < s.cin; ++ci)
        for (int u = 0; u < s.k; ++u)
          for (int v = 0; v < s.k; ++v)
            gkw[((static_cast<int64_t>(co) * s.cin + ci) * s.k + u) * s.k + v] +=
                detail::conv_kernel_grad_element(gy, padded.data(), s, oh, ow, pw, plane,
                                                 co, ci, u, v);
  }
}

}  // namespace serial

// ------------------------------------------------------------------- par --

namespace par {

template <class T>
void conv2d_forward(const T* x, const T* kw, T* y, const Conv2dSpec& s) {
  s.validate();
  const int m = s.margin(), ph = s.h + 2 * m, pw = s.w + 2 * m;
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<T> padded(static_cast<size_t>(s.cin) * ph * pw);
  pad_image(x, padded.data(), s.cin, s.h, s.w, m, s.pad);
  const int64_t plane = static_cast<int64_t>(ph) * pw;
  const T* pd = padded.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < s.cout; ++co)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        y[(static_cast<int64_t>(co) * oh + oy) * ow + ox] =
            detail::conv_out_element(pd, kw, s, pw, plane, co, oy, ox);
}

template <class T>
void conv2d_backward_input(const T* gy, const T* kw, T* gx, const Conv2dSpec& s) {
  const int m = s.margin(), ph = s.h + 2 * m, pw = s.w + 2 * m;
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<T> gpad(static_cast<size_t>(s.cin) * ph * pw);
  T* gp = gpad.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < s.cin; ++ci)
    for (int py = 0; py < ph; ++py)
      for (int px = 0; px < pw; ++px)
        gp[(static_cast<int64_t>(ci) * ph + py) * pw + px] =
            detail::conv_pad_grad_element(gy, kw, s, oh, ow, ci, py, px);
  detail::fold_pad_grad(gpad.data(), gx, s.cin, s.h, s.w, m, s.pad);
}

template <class T>
void conv2d_backward_kernel(const T* gy, const T* x, T* gkw, const Conv2dSpec& s) {
  const int m = s.margin(), ph = s.h + 2 * m, pw = s.w + 2 * m;
  const int oh = s.out_h(), ow = s.out_w();
  std::vector<T> padded(static_cast<size_t>(s.cin) * ph * pw);
  pad_image(x, padded.data(), s.cin, s.h, s.w, m, s.pad);
  const int64_t plane = static_cast<int64_t>(ph) * pw;
  const T* pd = padded.data();
  const int m2 = s.k * s.k;
  if (s.depthwise) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < s.cout; ++co)
      for (int u = 0; u < s.k; ++u)
        for (int v = 0; v < s.k; ++v)
          gkw[static_cast<int64_t>(co) * m2 + u * s.k + v] +=
              detail::conv_kernel_grad_element(gy, pd, s, oh, ow, pw, plane, co, co, u, v);
  } else {
#pragma omp parallel for collapse(2) schedule(static)
    for (int co = 0; co < s.cout; ++co)
      for (int ci = 0; ci < s.cin; ++ci)
        for (int u = 0; u < s.k; ++u)
          for (int v = 0; v < s.k; ++v)
            gkw[((static_cast<int64_t>(co) * s.cin + ci) * s.k + u) * s.k + v] +=
                detail::conv_kernel_grad_element(gy, pd, s, oh, ow, pw, plane, co, ci, u, v);
  }
}

}  // namespace par

// --------------------------------------------------------------- dispatch --

template <class T>
void conv2d_forward(const T* x, const T* kw, T* y, const Conv2dSpec& s) {
  if (parallel_enabled())
    par::conv2d_forward(x, kw, y, s);
  else
    serial::conv2d_forward(x, kw, y, s);
}

template <class T>
void conv2d_backward_input(const T* gy, const T* kw, T* gx, const Conv2dSpec& s) {
  if (parallel_enabled())
    par::conv2d_backward_input(gy, kw, gx, s);
  else
    serial::conv2d_backward_input(gy, kw, gx, s);
}

template <class T>
void conv2d_backward_kernel(const T* gy, const T* x, T* gkw, const Conv2dSpec& s) {
  if (parallel_enabled())
    par::conv2d_backward_kernel(gy, x, gkw, s);
  else
    serial::conv2d_backward_kernel(gy, x, gkw, s);
}

// ------------------------------------------------------- sparse matrices --

/// Compressed sparse row matrix with float entries. Row dot products
/// accumulate in double, in index order.
struct Csr {
  int rows = 0, cols = 0;
  std::vector<int64_t> ptr;  // rows + 1
  std::vector<int> idx;
  std::vector<float> val;
};

Csr transpose(const Csr& a);

namespace serial {
template <class T>
void csr_matvec(const Csr& a, const T* x, T* y) {
  for (int r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    for (int64_t e = a.ptr[r]; e < a.ptr[r + 1]; ++e)
      acc += static_cast<double>(a.val[static_cast<size_t>(e)]) *
             static_cast<double>(x[a.idx[static_cast<size_t>(e)]]);
    y[r] = static_cast<T>(acc);
  }
}
}  // namespace serial

namespace par {
template <class T>
void csr_matvec(const Csr& a, const T* x, T* y) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    for (int64_t e = a.ptr[r]; e < a.ptr[r + 1]; ++e)
      acc += static_cast<double>(a.val[static_cast<size_t>(e)]) *
             static_cast<double>(x[a.idx[static_cast<size_t>(e)]]);
    y[r] = static_cast<T>(acc);
  }
}
}  // namespace par

template <class T>
void csr_matvec(const Csr& a, const T* x, T* y) {
  if (parallel_enabled())
    par::csr_matvec(a, x, y);
  else
    serial::csr_matvec(a, x, y);
}

}  // namespace kern
}  // namespace trace
