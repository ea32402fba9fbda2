#pragma once

#include <vector>

#include <Eigen/Core>

#include "eiv/surrogate.hpp"

namespace eiv {

/// Configuration of the composite gradient solver for
///   min 0.5*b'Gamma_hat*b - gamma_hat'b + lambda*||b||_1  s.t. ||b||_1 <= R.
struct GdConfig {
  double lambda = 0.0;
  double R = 1.0;           // l1-ball radius
  double zeta = 1.0;        // inverse step size
  int max_iters = 2000;
  double tol_rel_obj = 1e-9;
  bool record_trace = false;  // keep iterates for post-hoc error curves
  Eigen::VectorXd beta0;      // empty means 0; projected onto the ball if needed
};

struct SolverTrace {
  std::vector<double> objective;   // phi(beta^t), length iterations_run + 1
  std::vector<double> opt_error;   // ||beta^t - beta_final||_2, only with record_trace
  std::vector<double> stat_error;  // ||beta^t - beta*||_2, only when beta* supplied
  int iterations_run = 0;
  bool converged = false;
  bool diverged = false;  // objective blew up past its initial value by 1e6
};

struct GdResult {
  Eigen::VectorXd beta_hat;
  SolverTrace trace;
};

/// Elementwise sign(v_i) * max(|v_i| - kappa, 0).
Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double kappa);

/// Euclidean projection onto {||b||_1 <= R} (sorted-threshold algorithm).
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double R);

/// Exact argmin over ||b||_1 <= R of 0.5*||b - v||^2 + lambda_over_zeta*||b||_1.
/// Both terms shrink coordinates by a constant on the active set, so the
/// solution is soft_threshold(v, lambda_over_zeta + theta) with theta >= 0
/// picked so the l1 constraint holds; theta comes from the same sorted scan
/// as the ball projection.
Eigen::VectorXd composite_prox(const Eigen::VectorXd& v, double lambda_over_zeta, double R);

/// Composite gradient descent: beta^{t+1} = composite_prox(beta^t - grad/zeta).
/// Stops when the objective spread over a 10-iteration window is below
/// tol_rel_obj (relative), at max_iters, or on divergence. When beta_star is
/// given the trace records the statistical error of every iterate.
GdResult solve_lasso_gd(const SurrogatePair& pair, const GdConfig& cfg,
                        const Eigen::VectorXd* beta_star = nullptr);

}  // namespace eiv
