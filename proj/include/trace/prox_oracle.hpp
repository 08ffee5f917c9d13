#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace trace {

// Quadratic objective F(x) = 0.5*x'Hx - c'x with convexity constants derived
// from the spectrum: mu = max(0, lambda_min), rho = max(0, -lambda_min).
struct QuadInstance {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  double mu = 0.0;
  double rho = 0.0;
};

QuadInstance make_quad(Eigen::MatrixXd H, Eigen::VectorXd c);

// Eigen-surgery builders: H = Q diag(e) Q' with an explicitly chosen extreme
// eigenvalue, so rho/mu are exact by construction.
QuadInstance make_convex_instance(int n, uint64_t seed);                        // lambda_min = 0
QuadInstance make_strongly_convex_instance(int n, uint64_t seed, double mu);    // lambda_min = mu
QuadInstance make_weakly_convex_instance(int n, uint64_t seed, double rho);     // lambda_min = -rho

// argmin_x F(x) + (beta/2)|x - x_ref|^2 = (H + beta I)^{-1}(c + beta x_ref).
Eigen::VectorXd quad_prox(const QuadInstance& inst, double beta,
                          const Eigen::VectorXd& x_ref);

struct TransitionCert {
  double stationarity = 0.0;       // |g* + beta(x*-x_ref)| / (1+|g*|)
  double identity_lhs = 0.0;       // beta * |x* - x_ref|
  double identity_rhs = 0.0;       // |g*|
  double identity_rel_err = 0.0;
};

TransitionCert verify_transition_bound(const QuadInstance& inst, double beta,
                                       const Eigen::VectorXd& x_ref);

struct LipschitzCert {
  double max_ratio = 0.0;
  double weak_factor = 0.0;    // beta/(beta-rho)
  double strong_factor = 0.0;  // beta/(beta+mu) when mu>0, else NaN
};

LipschitzCert prox_lipschitz_certificate(const QuadInstance& inst, double beta, int trials,
                                         uint64_t seed);

struct PropagationCert {
  double deviation = 0.0;     // |x_0 - x~_0| after injecting per-step errors
  double bound = 0.0;         // sum_s delta_s * prod_{j>s} beta_j/(beta_j-rho_j)
  double bound_strong = 0.0;  // same with q_j = beta_j/(beta_j+mu_j); NaN unless all mu_j>0
};

// instances/betas/deltas are in execution order (first prox applied first);
// after each exact prox step a seeded error of norm exactly delta_s is added.
PropagationCert verify_error_propagation(const std::vector<QuadInstance>& instances,
                                         const std::vector<double>& betas,
                                         const std::vector<double>& deltas, uint64_t seed);

struct Remark1Row {
  double shift = 0.0;        // how far the minimizer of F sits from x_ref
  double dist_beta0 = 0.0;   // |argmin F - x_ref| (unbounded in the shift)
  double dist_beta1 = 0.0;   // |prox(x_ref) - x_ref| at beta=1
  double gstar_norm = 0.0;   // |g*| at the beta=1 solution
};

std::vector<Remark1Row> remark1_demo();

struct CertRow {
  std::string instance, bound;
  double lhs = 0.0, rhs = 0.0;
  bool pass = false;
};

// The full certificate table behind `verify theorems`: transition identities
// over `trials` seeded instances, Lipschitz ratios, the error-propagation
// grid (T in {2,4,8} x convexity class), the uniform closed form, and the
// minimizer-drift comparison rows.
std::vector<CertRow> run_theorem_certificates(int n, int trials, uint64_t seed);

}  // namespace trace
