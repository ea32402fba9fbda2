#pragma once

#include <utility>

#include <Eigen/Core>

namespace eiv {

/// Bias-corrected moment pair: Gamma_hat = X^T X / n - tau_hat_B * I (exactly,
/// then symmetrized) and gamma_hat = X^T y / n. Gamma_hat is generally
/// indefinite, which is what makes the downstream objective nonconvex.
struct SurrogatePair {
  Eigen::MatrixXd Gamma_hat;  // m x m, symmetric
  Eigen::VectorXd gamma_hat;  // m
  double tau_hat_B = 0.0;
  int n = 0;
  int m = 0;
};

/// (||X||_F^2 - n * trace_A)_+ / (m * n); the clamp is applied to the trace
/// estimate before dividing by n.
double estimate_tau_B(const Eigen::MatrixXd& X, double trace_A);

SurrogatePair build_surrogate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double tau_hat_B);

/// Quadratic loss 0.5*beta'Gamma_hat*beta - gamma_hat'beta and its gradient
/// Gamma_hat*beta - gamma_hat.
std::pair<double, Eigen::VectorXd> loss_and_gradient(const SurrogatePair& pair,
                                                     const Eigen::VectorXd& beta);

/// ||gamma_hat - Gamma_hat * beta_star||_inf.
double oracle_residual(const SurrogatePair& pair, const Eigen::VectorXd& beta_star);

}  // namespace eiv
