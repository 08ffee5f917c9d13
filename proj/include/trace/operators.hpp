#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "trace/autograd.hpp"
#include "trace/kernels.hpp"
#include "trace/tensor.hpp"

namespace trace {

enum class OperatorKind { inpaint, downsample, blur, radon };

struct Sinogram {
  Tensor values;               // [num_angles, num_detectors]
  std::vector<double> angles;  // degrees
};

// A degradation model y = A(x). All operators are linear except blur, which
// clips its convolution output to [0,1]; adjoint() always addresses the
// linear part. apply_graph() appends the same computation to an autograd
// graph (including the clip), with operator data as constant leaves.
struct ForwardOperator {
  OperatorKind kind = OperatorKind::inpaint;
  bool linear = true;
  std::vector<int> in_shape, out_shape;

  Tensor mask;         // inpaint: [C,H,W] of {0,1}
  Tensor dw_kernel;    // downsample/blur: depthwise [C,1,k,k]
  PadMode pad = PadMode::symmetric;
  int factor = 1;      // downsample
  bool clip_output = false;

  std::shared_ptr<kern::Csr> sys, sys_t;  // radon
  std::vector<double> angles;
  int num_detectors = 0;

  Tensor apply(const Tensor& x) const;         // the full operator (clip included)
  Tensor apply_linear(const Tensor& x) const;  // without the blur clip
  Tensor adjoint(const Tensor& r) const;
  int apply_graph(Graph& g, int x) const;      // operator must outlive the graph
};

ForwardOperator make_inpaint(int h, int w, double missing_fraction, uint64_t seed,
                             int channels = 1);
ForwardOperator make_downsample(int factor, int h, int w, int channels = 1);
ForwardOperator make_motion_blur(int h, int w, int channels = 1, int length = 21);
ForwardOperator make_anisotropic_blur(int h, int w, int channels = 1);
ForwardOperator make_radon(int n, std::vector<double> angles_deg, int num_detectors = 0);

// Kernel builders (also used directly by tests). Both return [size,size]
// with nonnegative entries summing to 1.
Tensor make_motion_blur_kernel(int length = 21, double angle_deg = 45.0, int size = 21);
Tensor make_gaussian_kernel(double sigma_x, double sigma_y, double angle_deg, int size = 21);

// Max over `trials` of |<Ax,y> - <x,A'y>| / (|Ax|·|y|) with Gaussian x, y.
double adjoint_check(const ForwardOperator& op, int trials, uint64_t seed);

}  // namespace trace
