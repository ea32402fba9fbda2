#include "eiv/surrogate.hpp"

#include <stdexcept>

namespace eiv {

double estimate_tau_B(const Eigen::MatrixXd& X, double trace_A) {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("estimate_tau_B: empty X");
  if (!(trace_A > 0.0)) throw std::invalid_argument("estimate_tau_B: trace_A must be positive");
  const double n = static_cast<double>(X.rows());
  const double m = static_cast<double>(X.cols());
  const double tr_B_hat = std::max(X.squaredNorm() - n * trace_A, 0.0) / m;
  return tr_B_hat / n;
}

SurrogatePair build_surrogate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double tau_hat_B) {
  if (X.rows() != y.size())
    throw std::invalid_argument("build_surrogate: rows(X) must equal len(y)");
  if (tau_hat_B < 0.0) throw std::invalid_argument("build_surrogate: tau_hat_B must be >= 0");
  SurrogatePair pair;
  pair.n = static_cast<int>(X.rows());
  pair.m = static_cast<int>(X.cols());
  pair.tau_hat_B = tau_hat_B;
  const double inv_n = 1.0 / static_cast<double>(pair.n);
  pair.Gamma_hat.noalias() = X.transpose() * X * inv_n;
  pair.Gamma_hat.diagonal().array() -= tau_hat_B;
  pair.Gamma_hat = ((pair.Gamma_hat + pair.Gamma_hat.transpose()) / 2.0).eval();
  pair.gamma_hat.noalias() = X.transpose() * y * inv_n;
  return pair;
}

std::pair<double, Eigen::VectorXd> loss_and_gradient(const SurrogatePair& pair,
                                                     const Eigen::VectorXd& beta) {
  if (beta.size() != pair.m)
    throw std::invalid_argument("loss_and_gradient: dimension mismatch");
  Eigen::VectorXd Gb = pair.Gamma_hat * beta;
  const double value = 0.5 * beta.dot(Gb) - pair.gamma_hat.dot(beta);
  Eigen::VectorXd grad = Gb - pair.gamma_hat;
  return {value, std::move(grad)};
}

double oracle_residual(const SurrogatePair& pair, const Eigen::VectorXd& beta_star) {
  if (beta_star.size() != pair.m)
    throw std::invalid_argument("oracle_residual: dimension mismatch");
  return (pair.gamma_hat - pair.Gamma_hat * beta_star).cwiseAbs().maxCoeff();
}

}  // namespace eiv
