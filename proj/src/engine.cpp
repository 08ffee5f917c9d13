#include "trace/engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "trace/adam.hpp"
#include "trace/metrics.hpp"
#include "trace/rng.hpp"

namespace trace {

std::vector<double> beta_schedule(int T, double beta_hi, double beta_lo) {
  if (T < 1) throw std::invalid_argument("beta_schedule: T must be >= 1");
  if (!(beta_hi >= beta_lo) || beta_lo <= 0.0)
    throw std::invalid_argument("beta_schedule: need beta_hi >= beta_lo > 0");
  std::vector<double> b(static_cast<size_t>(T));
  if (T == 1) {
    b[0] = beta_hi;
    return b;
  }
  for (int t = 0; t < T; ++t)
    b[static_cast<size_t>(t)] =
        beta_lo + (beta_hi - beta_lo) * (static_cast<double>(t) / (T - 1));
  b[0] = beta_lo;
  b[static_cast<size_t>(T - 1)] = beta_hi;
  return b;
}

std::vector<double> sigma_schedule(int T, double eta, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("sigma_schedule: T must be >= 1");
  if (eta < 0.0) throw std::invalid_argument("sigma_schedule: eta must be >= 0");
  std::vector<double> s(static_cast<size_t>(T));
  if (T == 1) {
    s[0] = eta * std::sqrt(beta_start);
    return s;
  }
  for (int t = 0; t < T; ++t) {
    double bt = beta_start + (beta_end - beta_start) * (static_cast<double>(t) / (T - 1));
    if (t == 0) bt = beta_start;
    if (t == T - 1) bt = beta_end;
    s[static_cast<size_t>(t)] = eta * std::sqrt(bt);
  }
  return s;
}

Schedules make_schedules(const TraceConfig& cfg) {
  Schedules s;
  s.T = cfg.T;
  s.K = cfg.K;
  s.lr = cfg.lr;
  s.eta = cfg.eta;
  s.beta = cfg.flags.disable_coupling
               ? std::vector<double>(static_cast<size_t>(cfg.T), 0.0)
               : beta_schedule(cfg.T, cfg.beta_hi, cfg.beta_lo);
  s.sigma = cfg.flags.disable_perturbation
                ? std::vector<double>(static_cast<size_t>(cfg.T), 0.0)
                : sigma_schedule(cfg.T, cfg.eta);
  return s;
}

namespace {

struct LossGraph {
  Graph g;
  NetGraph net;
  int y_leaf = -1;
  int xprev_leaf = -1;  // only when coupled
  int data_sq = -1;     // |A D - y|^2
  int couple_sq = -1;   // |D - x_prev|^2
  int loss = -1;
};

// 0.5*|A D(input) - y|^2 (+ (beta/2)*|D(input) - x_prev|^2 when beta > 0).
// When beta == 0 the coupling nodes are not built at all, so an uncoupled run
// is structurally the pure data fit.
LossGraph build_loss_graph(const ForwardOperator& a, const NetworkParams& theta,
                           const Tensor& y, double beta, const Tensor* x_prev) {
  LossGraph lg;
  const int h = a.in_shape[1], w = a.in_shape[2];
  lg.net = build_net_graph(lg.g, theta, h, w);
  int ax = a.apply_graph(lg.g, lg.net.output);
  lg.y_leaf = lg.g.leaf(y);
  int res = lg.g.sub(ax, lg.y_leaf);
  lg.data_sq = lg.g.sum_squares(res);
  lg.loss = lg.g.scale(lg.data_sq, 0.5f);
  if (beta > 0.0) {
    lg.xprev_leaf = lg.g.leaf(*x_prev);
    int cres = lg.g.sub(lg.net.output, lg.xprev_leaf);
    lg.couple_sq = lg.g.sum_squares(cres);
    int cterm = lg.g.scale(lg.couple_sq, static_cast<float>(0.5 * beta));
    lg.loss = lg.g.add(lg.loss, cterm);
  }
  return lg;
}

// Runs K optimizer steps, recording the pre-update loss of each, then leaves
// the graph freshly evaluated at the final weights.
void optimize(LossGraph& lg, int k_steps, double lr, std::vector<float>& losses,
              const char* where) {
  AdamConfig acfg;
  acfg.lr = static_cast<float>(lr);
  AdamState state;
  losses.reserve(losses.size() + static_cast<size_t>(k_steps));
  for (int k = 0; k < k_steps; ++k) {
    lg.g.forward();
    const float lv = lg.g.value(lg.loss).data[0];
    if (!std::isfinite(lv))
      throw std::runtime_error(std::string("non-finite training loss in ") + where +
                               " at inner iteration " + std::to_string(k));
    losses.push_back(lv);
    lg.g.backward(lg.loss);
    adam_update(lg.g, lg.net.params, state, acfg);
  }
  lg.g.forward();
}

}  // namespace

DipResult dip_initialize(const Tensor& y, const ForwardOperator& a, const ArchConfig& arch,
                         int K, double lr, uint64_t seed) {
  if (K < 0) throw std::invalid_argument("dip_initialize: K must be >= 0");
  DipResult r;
  r.z = Tensor({arch.cin, a.in_shape[1], a.in_shape[2]});
  Rng zrng(mix_seed(seed, kSaltZ));
  zrng.fill_uniform(r.z, 0.0, 0.1);

  NetworkParams theta0 = init_network(arch, mix_seed(seed, kSaltNetInit));
  LossGraph lg = build_loss_graph(a, theta0, y, 0.0, nullptr);
  lg.g.value(lg.net.input) = r.z;

  optimize(lg, K, lr, r.inner_losses, "dip_initialize");
  r.loss_last = lg.g.value(lg.loss).data[0];
  r.loss_first = K > 0 ? static_cast<double>(r.inner_losses.front()) : r.loss_last;
  r.x = lg.g.value(lg.net.output);
  r.theta = extract_params(lg.g, lg.net, arch, seed);
  r.opt_steps = K;
  require_finite(r.x, "dip_initialize: x_T");
  return r;
}

StepResult trace_step(int t, const Tensor& x_prev, const NetworkParams& theta_warm,
                      const Tensor& y, const ForwardOperator& a, double beta_t, double sigma_t,
                      int K, double lr, uint64_t master_seed, const TraceFlags& flags) {
  if (K < 0) throw std::invalid_argument("trace_step: K must be >= 0");
  StepResult r;

  r.u = x_prev;
  if (!flags.disable_perturbation && sigma_t > 0.0) {
    Rng erng(mix_seed(master_seed, kSaltEps + static_cast<uint64_t>(t)));
    for (int64_t i = 0; i < r.u.numel(); ++i)
      r.u.data[i] += static_cast<float>(sigma_t * erng.normal());
  }

  const double beta_eff = flags.disable_coupling ? 0.0 : beta_t;
  NetworkParams theta0 =
      flags.disable_inheritance
          ? init_network(theta_warm.arch,
                         mix_seed(master_seed, kSaltReinit + static_cast<uint64_t>(t)))
          : theta_warm;

  LossGraph lg = build_loss_graph(a, theta0, y, beta_eff, &x_prev);
  lg.g.value(lg.net.input) = r.u;

  try {
    optimize(lg, K, lr, r.inner_losses, "trace_step");
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " (trajectory step t=" +
                             std::to_string(t) + ")");
  }

  r.x = lg.g.value(lg.net.output);
  if (!all_finite(r.x))
    throw std::runtime_error("non-finite state at trajectory step t=" + std::to_string(t));
  r.theta = extract_params(lg.g, lg.net, theta_warm.arch, theta_warm.seed);
  r.loss_data = 0.5 * static_cast<double>(lg.g.value(lg.data_sq).data[0]);
  r.loss_couple =
      beta_eff > 0.0 ? 0.5 * beta_eff * static_cast<double>(lg.g.value(lg.couple_sq).data[0])
                     : 0.0;
  r.opt_steps = K;
  return r;
}

TrajectoryRecord run_trace(const TraceConfig& cfg, const Tensor& y, const ForwardOperator& a,
                           const Tensor* ground_truth) {
  if (cfg.T < 1) throw std::invalid_argument("run_trace: T must be >= 1");
  if (cfg.snapshot_every < 1) throw std::invalid_argument("run_trace: bad snapshot cadence");

  TrajectoryRecord rec;
  rec.sched = make_schedules(cfg);

  DipResult dip = dip_initialize(y, a, cfg.arch, cfg.K, cfg.lr, cfg.seed);
  rec.xT = dip.x;
  rec.dip_loss_first = dip.loss_first;
  rec.dip_loss_last = dip.loss_last;
  rec.inner_losses = std::move(dip.inner_losses);
  rec.total_opt_steps = dip.opt_steps;
  rec.snapshots.push_back(dip.x);
  rec.snapshot_ts.push_back(cfg.T);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Tensor x_cur = dip.x;
  NetworkParams theta = std::move(dip.theta);

  for (int t = cfg.T - 1; t >= 0; --t) {
    StepResult sr = trace_step(t, x_cur, theta, y, a, rec.sched.beta[static_cast<size_t>(t)],
                               rec.sched.sigma[static_cast<size_t>(t)], cfg.K, cfg.lr,
                               cfg.seed, cfg.flags);
    StepLog log;
    log.t = t;
    log.delta = norm2_diff(sr.x, x_cur);
    log.beta_delta = rec.sched.beta[static_cast<size_t>(t)] * log.delta;
    log.loss_data = sr.loss_data;
    log.loss_couple = sr.loss_couple;
    log.psnr = ground_truth ? psnr(sr.x, *ground_truth) : nan;
    log.ssim = ground_truth ? ssim(sr.x, *ground_truth) : nan;
    rec.steps.push_back(log);

    rec.inner_losses.insert(rec.inner_losses.end(), sr.inner_losses.begin(),
                            sr.inner_losses.end());
    rec.total_opt_steps += sr.opt_steps;
    if (t % cfg.snapshot_every == 0 || t == 0) {
      rec.snapshots.push_back(sr.x);
      rec.snapshot_ts.push_back(t);
    }
    x_cur = std::move(sr.x);
    theta = std::move(sr.theta);
  }

  rec.x0 = x_cur;
  const int64_t expected = static_cast<int64_t>(cfg.K) +
                           static_cast<int64_t>(cfg.T) * static_cast<int64_t>(cfg.K);
  if (rec.total_opt_steps != expected)
    throw std::logic_error("run_trace: optimizer budget mismatch");
  return rec;
}

std::vector<std::pair<double, double>> delta_series(const TrajectoryRecord& rec) {
  if (rec.snapshots.size() < 2)
    throw std::invalid_argument("delta_series: need at least two states");
  for (size_t i = 1; i < rec.snapshot_ts.size(); ++i)
    if (rec.snapshot_ts[i - 1] - rec.snapshot_ts[i] != 1)
      throw std::invalid_argument("delta_series: snapshot trail is thinned");
  std::vector<std::pair<double, double>> out;
  out.reserve(rec.snapshots.size() - 1);
  for (size_t i = 1; i < rec.snapshots.size(); ++i) {
    const int t = rec.snapshot_ts[i];
    const double d = norm2_diff(rec.snapshots[i], rec.snapshots[i - 1]);
    const double b = rec.sched.beta.empty() ? 0.0 : rec.sched.beta[static_cast<size_t>(t)];
    out.emplace_back(d, b * d);
  }
  return out;
}

}  // namespace trace
