#include "trace/kernels.hpp"

#include <numeric>

namespace trace {
namespace kern {

Csr transpose(const Csr& a) {
  Csr t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.ptr.assign(static_cast<size_t>(t.rows) + 1, 0);
  for (int c : a.idx) ++t.ptr[static_cast<size_t>(c) + 1];
  std::partial_sum(t.ptr.begin(), t.ptr.end(), t.ptr.begin());
  t.idx.resize(a.idx.size());
  t.val.resize(a.val.size());
  std::vector<int64_t> cursor(t.ptr.begin(), t.ptr.end() - 1);
  for (int r = 0; r < a.rows; ++r)
    for (int64_t e = a.ptr[r]; e < a.ptr[r + 1]; ++e) {
      const int c = a.idx[static_cast<size_t>(e)];
      const int64_t slot = cursor[static_cast<size_t>(c)]++;
      t.idx[static_cast<size_t>(slot)] = r;
      t.val[static_cast<size_t>(slot)] = a.val[static_cast<size_t>(e)];
    }
  return t;
}

}  // namespace kern
}  // namespace trace
