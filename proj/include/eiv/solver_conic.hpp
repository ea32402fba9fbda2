#pragma once

#include <memory>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "eiv/surrogate.hpp"

namespace eiv {

/// min ||beta||_1 + lambda*t  s.t.  ||gamma_hat - Gamma_hat beta||_inf <= mu*t + omega,
///                                  ||beta||_2 <= t.
struct ConicConfig {
  double lambda_conic = 1.0;
  double mu = 0.0;
  double omega = 0.0;
  int max_iters = 20000;
  double tol_feas = 1e-6;
  double tol_gap = 1e-6;    // primal/dual residual tolerance of the splitting scheme
  double admm_rho = 1.0;    // fixed penalty, no adaptation
  double over_relax = 1.7;  // consensus over-relaxation, in [1, 2)
};

struct ConicSolution {
  Eigen::VectorXd beta_hat;
  double t_hat = 0.0;
  double objective = 0.0;
  double feas_residual = 0.0;  // max(0, ||g - G b||_inf - mu t - omega, ||b||_2 - t)
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;  // certified only for mu = 0 via dual growth
};

/// max(0, ||gamma_hat - Gamma_hat beta||_inf - mu*t - omega, ||beta||_2 - t).
double check_cone_constraint(const SurrogatePair& pair, const Eigen::VectorXd& beta, double t,
                             double mu, double omega);

/// Two-block operator splitting (consensus ADMM). The smooth block solves a
/// fixed normal system in beta, cached as a Cholesky factor so one instance
/// can be re-solved under many (mu, omega, lambda) settings; the other block
/// is three decoupled proximal maps: soft-thresholding, the second-order cone,
/// and the scaled infinity-norm cone {(r, s): ||r||_inf <= mu*s + omega}.
class ConicSolver {
 public:
  explicit ConicSolver(const SurrogatePair& pair);

  ConicSolution solve(const ConicConfig& cfg) const;

 private:
  const SurrogatePair& pair_;
  Eigen::MatrixXd G_scaled_;         // Gamma_hat / ||Gamma_hat||
  Eigen::LLT<Eigen::MatrixXd> llt_;  // 2*I + G_scaled^2
  double gamma_scale_ = 1.0;
  double op_norm_ = 1.0;
};

ConicSolution solve_conic(const SurrogatePair& pair, const ConicConfig& cfg);

/// Projection onto {(r, s): ||r||_inf <= mu*s + omega}, exposed for tests.
void project_inf_cone(Eigen::VectorXd& r, double& s, double mu, double omega);

}  // namespace eiv
