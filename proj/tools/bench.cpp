#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <utility>
#include <vector>

#include "trace/kernels.hpp"
#include "trace/parallel.hpp"
#include "trace/rng.hpp"
#include "trace/tensor.hpp"

using trace::Tensor;
using trace::kern::Conv2dSpec;
using trace::kern::Csr;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double par_ms) {
  std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name, serial_ms,
              par_ms, serial_ms / par_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  if (argc > 1) reps = std::atoi(argv[1]);
  std::printf("threads available: %d (reps=%d)\n", trace::parallel_threads(), reps);

  trace::Rng rng(7);

  for (int n : {64, 128, 256}) {
    Conv2dSpec spec;
    spec.cin = 16;
    spec.h = spec.w = n;
    spec.cout = 16;
    spec.k = 3;
    spec.pad = trace::PadMode::zero;
    Tensor x({spec.cin, n, n});
    Tensor k({spec.cout, spec.cin, spec.k, spec.k});
    rng.fill_normal(x);
    rng.fill_normal(k);
    Tensor y({spec.cout, spec.out_h(), spec.out_w()});
    Tensor gx(x.shape), gk(k.shape);

    char label[64];
    std::snprintf(label, sizeof label, "conv2d fwd 16ch %dx%d", n, n);
    report(label,
           time_ms([&] { trace::kern::serial::conv2d_forward(x.data.data(), k.data.data(),
                                                             y.data.data(), spec); },
                   reps),
           time_ms([&] { trace::kern::par::conv2d_forward(x.data.data(), k.data.data(),
                                                          y.data.data(), spec); },
                   reps));

    std::snprintf(label, sizeof label, "conv2d bwd-input %dx%d", n, n);
    report(label,
           time_ms(
               [&] {
                 std::fill(gx.data.begin(), gx.data.end(), 0.f);
                 trace::kern::serial::conv2d_backward_input(y.data.data(), k.data.data(),
                                                            gx.data.data(), spec);
               },
               reps),
           time_ms(
               [&] {
                 std::fill(gx.data.begin(), gx.data.end(), 0.f);
                 trace::kern::par::conv2d_backward_input(y.data.data(), k.data.data(),
                                                         gx.data.data(), spec);
               },
               reps));

    std::snprintf(label, sizeof label, "conv2d bwd-kernel %dx%d", n, n);
    report(label,
           time_ms(
               [&] {
                 std::fill(gk.data.begin(), gk.data.end(), 0.f);
                 trace::kern::serial::conv2d_backward_kernel(y.data.data(), x.data.data(),
                                                             gk.data.data(), spec);
               },
               reps),
           time_ms(
               [&] {
                 std::fill(gk.data.begin(), gk.data.end(), 0.f);
                 trace::kern::par::conv2d_backward_kernel(y.data.data(), x.data.data(),
                                                          gk.data.data(), spec);
               },
               reps));
  }

  for (int n : {64, 128}) {
    // sparse system matrix shaped like a tomography projector
    const int angles = 90;
    const int nd = static_cast<int>(std::ceil(n * 1.4142)) | 1;
    Csr a;
    a.rows = angles * nd;
    a.cols = n * n;
    a.ptr.assign(static_cast<size_t>(a.rows) + 1, 0);
    trace::Rng srng(11);
    for (int r = 0; r < a.rows; ++r) {
      for (int j = 0; j < 2 * n; ++j) {
        a.idx.push_back(static_cast<int>(srng.next_u64() % static_cast<uint64_t>(a.cols)));
        a.val.push_back(static_cast<float>(srng.uniform()));
      }
      a.ptr[static_cast<size_t>(r) + 1] = static_cast<int64_t>(a.idx.size());
    }
    std::vector<float> vx(static_cast<size_t>(a.cols)), vy(static_cast<size_t>(a.rows));
    for (float& v : vx) v = static_cast<float>(rng.uniform());

    char label[64];
    std::snprintf(label, sizeof label, "csr_matvec %dx%d img", n, n);
    report(label,
           time_ms([&] { trace::kern::serial::csr_matvec(a, vx.data(), vy.data()); }, reps),
           time_ms([&] { trace::kern::par::csr_matvec(a, vx.data(), vy.data()); }, reps));
  }
  return 0;
}
