#include "trace/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trace {

void adam_update(Graph& g, const std::vector<int>& param_ids, AdamState& state,
                 const AdamConfig& cfg) {
  const size_t np = param_ids.size();
  if (state.m.empty()) {
    state.m.reserve(np);
    state.v.reserve(np);
    for (int id : param_ids) {
      state.m.emplace_back(g.value(id).shape);
      state.v.emplace_back(g.value(id).shape);
    }
  }
  if (state.m.size() != np)
    throw std::invalid_argument("adam_update: state does not match parameter list");

  state.step += 1;
  const float bc1 = 1.f - static_cast<float>(std::pow(static_cast<double>(cfg.b1),
                                                      static_cast<double>(state.step)));
  const float bc2 = 1.f - static_cast<float>(std::pow(static_cast<double>(cfg.b2),
                                                      static_cast<double>(state.step)));

  for (size_t p = 0; p < np; ++p) {
    const Tensor& grad = g.grad(param_ids[p]);
    if (!all_finite(grad))
      throw std::runtime_error("adam_update: non-finite gradient in parameter " +
                               std::to_string(p));
    Tensor& w = g.value(param_ids[p]);
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    if (!m.same_shape(w))
      throw std::invalid_argument("adam_update: moment shape mismatch");
    const int64_t n = w.numel();
    for (int64_t i = 0; i < n; ++i) {
      const float gi = grad.data[i];
      m.data[i] = cfg.b1 * m.data[i] + (1.f - cfg.b1) * gi;
      v.data[i] = cfg.b2 * v.data[i] + (1.f - cfg.b2) * gi * gi;
      const float mhat = m.data[i] / bc1;
      const float vhat = v.data[i] / bc2;
      w.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace trace
