#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "trace/rng.hpp"
#include "trace/tensor.hpp"

namespace testutil {

inline trace::Tensor random_tensor(std::vector<int> shape, uint64_t seed, float lo = 0.f,
                                   float hi = 1.f) {
  trace::Tensor t(std::move(shape));
  trace::Rng rng(seed);
  rng.fill_uniform(t, lo, hi);
  return t;
}

inline trace::Tensor random_normal(std::vector<int> shape, uint64_t seed) {
  trace::Tensor t(std::move(shape));
  trace::Rng rng(seed);
  rng.fill_normal(t);
  return t;
}

inline bool bitwise_equal(const trace::Tensor& a, const trace::Tensor& b) {
  if (a.shape != b.shape) return false;
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i] != b.data[i]) return false;
  return true;
}

inline double max_abs_diff(const trace::Tensor& a, const trace::Tensor& b) {
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(double(a.data[i]) - double(b.data[i])));
  return m;
}

inline double rel_l2_diff(const trace::Tensor& a, const trace::Tensor& b) {
  double num = 0, den = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = double(a.data[i]) - double(b.data[i]);
    num += d * d;
    den += double(b.data[i]) * double(b.data[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-30);
}

}  // namespace testutil
