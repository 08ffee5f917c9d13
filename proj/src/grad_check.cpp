#include "trace/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "trace/rng.hpp"

namespace trace {

GradCheckResult finite_difference_check(Graph& g, int out, const std::vector<int>& leaf_ids,
                                        double h, uint64_t seed, int max_coords_per_leaf) {
  g.forward();
  g.backward(out);

  GradCheckResult res;
  for (size_t li = 0; li < leaf_ids.size(); ++li) {
    const int id = leaf_ids[li];
    const Tensor& v = g.value(id);
    const int64_t n = v.numel();

    std::vector<int64_t> coords;
    if (n <= max_coords_per_leaf) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      Rng rng(mix_seed(seed, 0xfd00 + li));
      coords = rng.sample_without_replacement(n, max_coords_per_leaf);
      std::sort(coords.begin(), coords.end());
    }

    std::vector<double> base(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) base[static_cast<size_t>(i)] = v.data[i];

    const Tensor& ad = g.grad(id);
    for (int64_t c : coords) {
      std::unordered_map<int, std::vector<double>> ov;
      ov[id] = base;
      ov[id][static_cast<size_t>(c)] = base[static_cast<size_t>(c)] + h;
      const double fp = g.eval_f64(out, ov);
      ov[id][static_cast<size_t>(c)] = base[static_cast<size_t>(c)] - h;
      const double fm = g.eval_f64(out, ov);
      const double fd = (fp - fm) / (2.0 * h);
      const double a = ad.data[c];
      const double denom = std::max({1.0, std::abs(fd), std::abs(a)});
      res.max_rel_err = std::max(res.max_rel_err, std::abs(a - fd) / denom);
      ++res.coords_checked;
    }
  }
  return res;
}

}  // namespace trace
