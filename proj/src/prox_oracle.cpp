#include "trace/prox_oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "trace/rng.hpp"

namespace trace {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd random_vector(Rng& rng, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

Eigen::MatrixXd random_orthogonal(Rng& rng, int n) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ();
}

// H = Q diag(eigs) Q', c random; eigs[0] is the intended extreme eigenvalue.
QuadInstance surgery(int n, uint64_t seed, double extreme, double spread_lo,
                     double spread_hi) {
  Rng rng(mix_seed(seed, 0x9d0c));
  Eigen::MatrixXd q = random_orthogonal(rng, n);
  Eigen::VectorXd e(n);
  e[0] = extreme;
  for (int i = 1; i < n; ++i) e[i] = rng.uniform(spread_lo, spread_hi);
  Eigen::MatrixXd h = q * e.asDiagonal() * q.transpose();
  h = 0.5 * (h + h.transpose()).eval();
  return make_quad(std::move(h), random_vector(rng, n));
}

}  // namespace

QuadInstance make_quad(Eigen::MatrixXd H, Eigen::VectorXd c) {
  if (H.rows() != H.cols() || H.rows() != c.size())
    throw std::invalid_argument("make_quad: dimension mismatch");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("make_quad: H not symmetric");
  QuadInstance inst;
  inst.H = std::move(H);
  inst.c = std::move(c);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inst.H, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  inst.mu = std::max(0.0, lmin);
  inst.rho = std::max(0.0, -lmin);
  return inst;
}

QuadInstance make_convex_instance(int n, uint64_t seed) {
  return surgery(n, seed, 0.0, 0.5, 4.0);
}

QuadInstance make_strongly_convex_instance(int n, uint64_t seed, double mu) {
  if (mu <= 0) throw std::invalid_argument("strongly convex instance needs mu > 0");
  return surgery(n, seed, mu, mu, mu + 4.0);
}

QuadInstance make_weakly_convex_instance(int n, uint64_t seed, double rho) {
  if (rho <= 0) throw std::invalid_argument("weakly convex instance needs rho > 0");
  return surgery(n, seed, -rho, 0.5, 4.0);
}

Eigen::VectorXd quad_prox(const QuadInstance& inst, double beta,
                          const Eigen::VectorXd& x_ref) {
  if (!(beta > inst.rho))
    throw std::invalid_argument("quad_prox: need beta > rho for a well-posed step");
  const int n = static_cast<int>(inst.H.rows());
  Eigen::MatrixXd m = inst.H + beta * Eigen::MatrixXd::Identity(n, n);
  return m.ldlt().solve(inst.c + beta * x_ref);
}

TransitionCert verify_transition_bound(const QuadInstance& inst, double beta,
                                       const Eigen::VectorXd& x_ref) {
  const Eigen::VectorXd xs = quad_prox(inst, beta, x_ref);
  const Eigen::VectorXd g = inst.H * xs - inst.c;
  TransitionCert cert;
  cert.stationarity = (g + beta * (xs - x_ref)).norm() / (1.0 + g.norm());
  cert.identity_lhs = beta * (xs - x_ref).norm();
  cert.identity_rhs = g.norm();
  cert.identity_rel_err = std::abs(cert.identity_lhs - cert.identity_rhs) /
                          std::max(cert.identity_rhs, 1e-15);
  return cert;
}

LipschitzCert prox_lipschitz_certificate(const QuadInstance& inst, double beta, int trials,
                                         uint64_t seed) {
  LipschitzCert cert;
  cert.weak_factor = beta / (beta - inst.rho);
  cert.strong_factor = inst.mu > 0 ? beta / (beta + inst.mu) : kNan;
  const int n = static_cast<int>(inst.H.rows());
  Rng rng(mix_seed(seed, 0x11b5));
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd a = random_vector(rng, n);
    const Eigen::VectorXd b = random_vector(rng, n);
    const double dist = (a - b).norm();
    if (dist == 0.0) continue;  // ratio defined as 0
    const double ratio = (quad_prox(inst, beta, a) - quad_prox(inst, beta, b)).norm() / dist;
    cert.max_ratio = std::max(cert.max_ratio, ratio);
  }
  return cert;
}

PropagationCert verify_error_propagation(const std::vector<QuadInstance>& instances,
                                         const std::vector<double>& betas,
                                         const std::vector<double>& deltas, uint64_t seed) {
  const size_t T = instances.size();
  if (T == 0 || betas.size() != T || deltas.size() != T)
    throw std::invalid_argument("verify_error_propagation: length mismatch");
  const int n = static_cast<int>(instances[0].H.rows());

  Rng rng(mix_seed(seed, 0xe990));
  Eigen::VectorXd ideal = random_vector(rng, n);
  Eigen::VectorXd noisy = ideal;

  for (size_t s = 0; s < T; ++s) {
    ideal = quad_prox(instances[s], betas[s], ideal);
    noisy = quad_prox(instances[s], betas[s], noisy);
    if (deltas[s] > 0.0) {
      Eigen::VectorXd dir = random_vector(rng, n);
      noisy += (deltas[s] / dir.norm()) * dir;
    }
  }

  PropagationCert cert;
  cert.deviation = (noisy - ideal).norm();
  cert.bound = 0.0;
  bool all_strong = true;
  double bound_strong = 0.0;
  for (size_t s = 0; s < T; ++s) {
    double prod_weak = 1.0, prod_strong = 1.0;
    for (size_t j = s + 1; j < T; ++j) {
      prod_weak *= betas[j] / (betas[j] - instances[j].rho);
      if (instances[j].mu > 0)
        prod_strong *= betas[j] / (betas[j] + instances[j].mu);
      else
        all_strong = false;
    }
    cert.bound += deltas[s] * prod_weak;
    bound_strong += deltas[s] * prod_strong;
  }
  for (const QuadInstance& inst : instances)
    if (inst.mu <= 0) all_strong = false;
  cert.bound_strong = all_strong ? bound_strong : kNan;
  return cert;
}

std::vector<Remark1Row> remark1_demo() {
  // F_s(x) = (1/(2s))|x - s d|^2 keeps |grad F| bounded by |d| while the
  // minimizer walks away: with beta = 0 the update lands s away from x_ref,
  // with beta = 1 it stays within |g*|.
  std::vector<Remark1Row> rows;
  const int n = 4;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  d[0] = 1.0;
  const Eigen::VectorXd x_ref = Eigen::VectorXd::Zero(n);
  for (double s : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
    Remark1Row row;
    row.shift = s;
    if (s == 0.0) {
      rows.push_back(row);  // everything zero
      continue;
    }
    QuadInstance inst =
        make_quad(Eigen::MatrixXd::Identity(n, n) / s, d);  // minimizer at s*d
    row.dist_beta0 = (s * d - x_ref).norm();
    const Eigen::VectorXd xs = quad_prox(inst, 1.0, x_ref);
    row.dist_beta1 = (xs - x_ref).norm();
    row.gstar_norm = (inst.H * xs - inst.c).norm();
    rows.push_back(row);
  }
  return rows;
}

namespace {

void push(std::vector<CertRow>& rows, std::string instance, std::string bound, double lhs,
          double rhs, double slack) {
  rows.push_back({std::move(instance), std::move(bound), lhs, rhs, lhs <= rhs + slack});
}

QuadInstance grid_instance(int kind, int n, uint64_t seed) {
  switch (kind) {
    case 0: return make_convex_instance(n, seed);
    case 1: return make_weakly_convex_instance(n, seed, 0.5);
    default: return make_strongly_convex_instance(n, seed, 1.0);
  }
}

}  // namespace

std::vector<CertRow> run_theorem_certificates(int n, int trials, uint64_t seed) {
  if (n < 2 || trials < 1) throw std::invalid_argument("certificates: bad n/trials");
  std::vector<CertRow> rows;

  // Exact prox solutions: stationarity and the |x*-x_ref|*beta = |g*| identity.
  for (int i = 0; i < trials; ++i) {
    const uint64_t s = mix_seed(seed, 0x7100 + static_cast<uint64_t>(i));
    const QuadInstance inst = grid_instance(i % 3, n, s);
    const double beta = inst.rho > 0 ? 2.0 * inst.rho + 0.5 : 1.0 + 0.01 * (i % 7);
    Rng rng(mix_seed(s, 0x0ef0));
    Eigen::VectorXd x_ref(n);
    for (int j = 0; j < n; ++j) x_ref[j] = rng.normal();
    const TransitionCert c = verify_transition_bound(inst, beta, x_ref);
    const std::string id = "transition-" + std::to_string(i);
    push(rows, id, "stationarity", c.stationarity, 1e-10, 0.0);
    push(rows, id, "distance-gradient-identity", c.identity_rel_err, 1e-9, 0.0);
  }

  // Prox Lipschitz factors for the strongly and weakly convex cases.
  for (int i = 0; i < 3; ++i) {
    const uint64_t s = mix_seed(seed, 0x1200 + static_cast<uint64_t>(i));
    const QuadInstance inst = grid_instance(i, n, s);
    const double beta = inst.rho > 0 ? 2.0 * inst.rho : 1.0;
    const LipschitzCert c = prox_lipschitz_certificate(inst, beta, trials, s);
    const char* name = i == 0 ? "lipschitz-convex" : (i == 1 ? "lipschitz-weak" : "lipschitz-strong");
    push(rows, name, "ratio-vs-weak-factor", c.max_ratio, c.weak_factor, 1e-9);
    if (inst.mu > 0)
      push(rows, name, "ratio-vs-contraction", c.max_ratio, c.strong_factor, 1e-9);
  }

  // Error propagation over the T x convexity grid.
  for (int T : {2, 4, 8}) {
    for (int kind = 0; kind < 3; ++kind) {
      std::vector<QuadInstance> insts;
      std::vector<double> betas, deltas;
      for (int t = 0; t < T; ++t) {
        const uint64_t s =
            mix_seed(seed, 0x3000 + static_cast<uint64_t>(T * 16 + kind * 4 + t));
        insts.push_back(grid_instance(kind, n, s));
        betas.push_back(insts.back().rho > 0 ? 2.0 * insts.back().rho : 1.0);
        deltas.push_back(0.05 + 0.01 * t);
      }
      const PropagationCert c = verify_error_propagation(insts, betas, deltas, seed);
      const std::string id = "propagation-T" + std::to_string(T) + "-" +
                             (kind == 0 ? "convex" : kind == 1 ? "weak" : "strong");
      push(rows, id, "deviation-vs-bound", c.deviation, c.bound, 1e-9);
      if (!std::isnan(c.bound_strong))
        push(rows, id, "deviation-vs-contraction-bound", c.deviation, c.bound_strong, 1e-9);
    }
  }

  // Uniform closed form: q = 0.5 via H = I, beta = 1; bound = d(1-q^T)/(1-q).
  {
    const int T = 4;
    const double delta = 0.1, q = 0.5;
    std::vector<QuadInstance> insts;
    std::vector<double> betas(T, 1.0), deltas(T, delta);
    for (int t = 0; t < T; ++t) {
      Rng rng(mix_seed(seed, 0x4000 + static_cast<uint64_t>(t)));
      insts.push_back(
          make_quad(Eigen::MatrixXd::Identity(n, n), random_vector(rng, n)));
    }
    const PropagationCert c = verify_error_propagation(insts, betas, deltas, seed);
    const double closed = delta * (1.0 - std::pow(q, T)) / (1.0 - q);
    push(rows, "propagation-uniform", "deviation-vs-closed-form", c.deviation, closed, 1e-9);
    push(rows, "propagation-uniform", "closed-form-vs-product-bound",
         std::abs(c.bound_strong - closed), 1e-12, 0.0);
  }

  // beta = 0 walks away with the shift; beta = 1 stays within |g*|.
  {
    const std::vector<Remark1Row> demo = remark1_demo();
    for (const Remark1Row& r : demo)
      push(rows, "remark1-shift-" + std::to_string(static_cast<int>(r.shift)),
           "beta1-distance-vs-gstar", r.dist_beta1, r.gstar_norm, 1e-12);
    // Documented growth: the beta=0 distance must strictly increase with the
    // shift while the beta=1 distance stays bounded by 1.
    bool growing = true;
    for (size_t i = 1; i < demo.size(); ++i)
      growing = growing && demo[i].dist_beta0 > demo[i - 1].dist_beta0;
    push(rows, "remark1", "beta0-distance-grows", growing ? 0.0 : 1.0, 0.0, 0.0);
    double worst_b1 = 0.0;
    for (const Remark1Row& r : demo) worst_b1 = std::max(worst_b1, r.dist_beta1);
    push(rows, "remark1", "beta1-distance-bounded", worst_b1, 1.0, 1e-12);
  }

  return rows;
}

}  // namespace trace
