#pragma once

#include <cstdint>
#include <string>

#include "trace/engine.hpp"
#include "trace/tasks.hpp"
#include "trace/tensor.hpp"

namespace trace {

// 8-bit binary PGM (P5) / PPM (P6), bytes mapped to [0,1] by v/255 and back
// by round(v*255) clamped.
Tensor read_image(const std::string& path);  // PGM, PPM, or F32 by magic
void write_pgm(const std::string& path, const Tensor& img);   // [1,H,W]
void write_ppm(const std::string& path, const Tensor& img);   // [3,H,W]
void write_image(const std::string& path, const Tensor& img); // picks by channel count

// Raw float states: ASCII header "F32 C H W\n", then C*H*W little-endian
// 32-bit floats. Round-trips bitwise.
Tensor read_f32(const std::string& path);
void write_f32(const std::string& path, const Tensor& t);

// Header t,delta,beta_delta,loss_data,loss_couple,psnr,ssim; one row per
// step, t descending; %.8e floats; inf/nan literals only in psnr/ssim.
void write_trace_csv(const std::string& path, const TrajectoryRecord& rec);

// Fully resolved run configuration; a manifest alone reproduces a run bitwise.
struct RunManifest {
  std::string task = "inpaint50";
  std::string input = "synth";  // "synth", "shepp", or an image path
  int size = 64;                // builtin input side length
  int T = 40, K = 150;
  double lr = 1e-3, beta_hi = 5e-3, beta_lo = 5e-4, eta = 1.0;
  uint64_t seed = 0;
  int depth = 3, width = 16;
  bool no_coupling = false, no_perturb = false, no_inherit = false;
  int snapshot_every = 1;
  int views = 0;  // CT override; 0 = task default
  std::string version;
};

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

Tensor load_input_image(const RunManifest& m);
TraceConfig config_from_manifest(const RunManifest& m, int channels);
TaskSpec task_from_manifest(const RunManifest& m);

// Loads the input, degrades it, runs the trajectory, and writes manifest,
// recon (quantized + F32), per-state F32 snapshots, and trace.csv to out_dir.
TrajectoryRecord execute_manifest(const RunManifest& m, const std::string& out_dir);

}  // namespace trace
