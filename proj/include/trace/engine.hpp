#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "trace/network.hpp"
#include "trace/operators.hpp"
#include "trace/tensor.hpp"

namespace trace {

// Per-step schedules for a backward trajectory x_T..x_0. Index t runs 0..T-1
// with t = T-1 executed first, so both ladders are largest at the start of
// the trajectory and smallest at the final state.
struct Schedules {
  std::vector<double> beta, sigma;
  int T = 40, K = 150;
  double lr = 1e-3, eta = 1.0;
};

// beta_t = beta_lo + (beta_hi - beta_lo) * t/(T-1); T=1 gives [beta_hi].
std::vector<double> beta_schedule(int T, double beta_hi = 5e-3, double beta_lo = 5e-4);

// sigma_t = eta * sqrt(b_t) on the variance ladder
// b_t = beta_start + (beta_end - beta_start) * t/(T-1); T=1 gives
// eta*sqrt(beta_start).
std::vector<double> sigma_schedule(int T, double eta, double beta_start = 1e-4,
                                   double beta_end = 1e-2);

struct TraceFlags {
  bool disable_coupling = false;
  bool disable_perturbation = false;
  bool disable_inheritance = false;
};

struct TraceConfig {
  int T = 40, K = 150;
  double lr = 1e-3;
  double beta_hi = 5e-3, beta_lo = 5e-4;
  double eta = 1.0;
  ArchConfig arch;
  uint64_t seed = 0;
  TraceFlags flags;
  int snapshot_every = 1;  // keep x_t when t is a multiple (x_T and x_0 always kept)
};

Schedules make_schedules(const TraceConfig& cfg);

struct StepLog {
  int t = 0;
  double delta = 0, beta_delta = 0;
  double loss_data = 0, loss_couple = 0;
  double psnr = 0, ssim = 0;  // NaN without ground truth
};

struct TrajectoryRecord {
  std::vector<StepLog> steps;      // t = T-1 down to 0
  Tensor xT, x0;
  std::vector<Tensor> snapshots;   // stored states, trajectory order
  std::vector<int> snapshot_ts;    // T for x_T, then the kept t values down to 0
  std::vector<float> inner_losses; // pre-update loss per optimizer step (init + trajectory)
  int64_t total_opt_steps = 0;     // K + T*K
  double dip_loss_first = 0, dip_loss_last = 0;
  Schedules sched;
};

struct DipResult {
  Tensor x;  // x_T
  NetworkParams theta;
  Tensor z;
  double loss_first = 0, loss_last = 0;
  std::vector<float> inner_losses;
  int64_t opt_steps = 0;
};

// Uncoupled warm-up: draws z once (uniform [0,0.1]), trains K Adam steps on
// 0.5*|A D(z) - y|^2, returns x_T = D(z) under the trained weights.
DipResult dip_initialize(const Tensor& y, const ForwardOperator& a, const ArchConfig& arch,
                         int K, double lr, uint64_t seed);

struct StepResult {
  Tensor x;  // x_t
  NetworkParams theta;
  Tensor u;
  double loss_data = 0, loss_couple = 0;
  std::vector<float> inner_losses;
  int64_t opt_steps = 0;
};

// One trajectory step: u_t = x_prev + sigma_t*eps, K Adam steps on
// 0.5*|A D(u_t) - y|^2 + (beta_t/2)*|D(u_t) - x_prev|^2 from inherited (or
// freshly seeded) weights with reset Adam moments, then x_t = D(u_t).
StepResult trace_step(int t, const Tensor& x_prev, const NetworkParams& theta_warm,
                      const Tensor& y, const ForwardOperator& a, double beta_t, double sigma_t,
                      int K, double lr, uint64_t master_seed, const TraceFlags& flags);

TrajectoryRecord run_trace(const TraceConfig& cfg, const Tensor& y, const ForwardOperator& a,
                           const Tensor* ground_truth = nullptr);

// (delta_t, beta_t*delta_t) for t = T-1..0, recomputed from the stored
// states; requires a full snapshot trail (cadence 1).
std::vector<std::pair<double, double>> delta_series(const TrajectoryRecord& rec);

// RNG stream salts (master seed is mixed with these).
inline constexpr uint64_t kSaltZ = 0x01;
inline constexpr uint64_t kSaltNetInit = 0x02;
inline constexpr uint64_t kSaltEps = 0x100;      // + t
inline constexpr uint64_t kSaltReinit = 0x1000;  // + t

}  // namespace trace
