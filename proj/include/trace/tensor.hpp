#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace trace {

/// Dense row-major single-precision tensor. The unit of image storage and
/// autodiff values.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, float fill = 0.f) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), fill);
  }
  Tensor(std::vector<int> s, std::vector<float> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape))
      throw std::invalid_argument("tensor: data length does not match shape");
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s), 0.f); }
  static Tensor full(std::vector<int> s, float v) { return Tensor(std::move(s), v); }

  static int64_t numel_of(const std::vector<int>& s) {
    if (s.empty()) throw std::invalid_argument("tensor: empty shape");
    int64_t n = 1;
    for (int e : s) {
      if (e <= 0) throw std::invalid_argument("tensor: nonpositive extent");
      n *= e;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  float& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }
};

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(where) + ": shape mismatch " +
                                shape_str(a.shape) + " vs " + shape_str(b.shape));
}

inline bool all_finite(const Tensor& t) {
  for (float v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_finite(const Tensor& t, const char* where) {
  if (!all_finite(t))
    throw std::runtime_error(std::string(where) + ": non-finite value in tensor");
}

// Reductions accumulate serially in double. Fixed order keeps results
// bitwise reproducible across runs and thread counts.
inline double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

inline double sum_squares(const Tensor& a) {
  double acc = 0.0;
  for (float v : a.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

inline double norm2(const Tensor& a) { return std::sqrt(sum_squares(a)); }

inline double norm2_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "norm2_diff");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace trace
