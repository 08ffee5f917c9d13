#pragma once

#include <cstdint>

#include "trace/tensor.hpp"

namespace trace {

// Peak-signal-to-noise ratio for images in [0,1] (peak 1): 10*log10(1/MSE).
// Identical images give +infinity.
double psnr(const Tensor& x, const Tensor& ref);

// SSIM with a 7x7 uniform window, K1=0.01, K2=0.03, dynamic range 1; plain
// (unweighted) window statistics over valid positions, channels averaged.
double ssim(const Tensor& x, const Tensor& ref);

// 10-ellipse head phantom on [-1,1]^2, intensities in [0,1], exactly
// left-right symmetric in the continuum.
Tensor shepp_logan(int n);

// Piecewise-smooth test image: smooth ramp background plus seeded discs and
// rectangles of constant or gently shaded intensity, values in [0,1].
Tensor synthetic_piecewise(int n, uint64_t seed, int channels = 1);

// (x - min) / (max - min); all-equal input maps to zeros.
Tensor normalize_minmax(const Tensor& x);

}  // namespace trace
