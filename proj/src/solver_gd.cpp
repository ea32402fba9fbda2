#include "eiv/solver_gd.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace eiv {

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("soft_threshold: kappa must be >= 0");
  return v.array().sign() * (v.array().abs() - kappa).max(0.0);
}

namespace {

// Smallest theta >= 0 with sum_i (|v_i| - theta)_+ <= R; 0 when v is inside.
double l1_shrink_level(const Eigen::VectorXd& v, double R) {
  if (v.lpNorm<1>() <= R) return 0.0;
  std::vector<double> a(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::abs(v(i));
  std::sort(a.begin(), a.end(), std::greater<double>());
  // After thresholding at theta in [a_{k}, a_{k-1}) the l1 norm is
  // cumsum_k - k*theta; find the segment where it crosses R.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumsum += a[k];
    const double candidate = (cumsum - R) / static_cast<double>(k + 1);
    if (k + 1 == a.size() || candidate >= a[k + 1]) {
      theta = candidate;
      break;
    }
  }
  return std::max(theta, 0.0);
}

}  // namespace

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("project_l1_ball: R must be positive");
  const double theta = l1_shrink_level(v, R);
  if (theta == 0.0) return v;
  return soft_threshold(v, theta);
}

Eigen::VectorXd composite_prox(const Eigen::VectorXd& v, double lambda_over_zeta, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("composite_prox: R must be positive");
  if (lambda_over_zeta < 0.0)
    throw std::invalid_argument("composite_prox: lambda_over_zeta must be >= 0");
  Eigen::VectorXd u = lambda_over_zeta > 0.0 ? soft_threshold(v, lambda_over_zeta) : v;
  if (u.lpNorm<1>() <= R) return u;
  return project_l1_ball(u, R);
}

GdResult solve_lasso_gd(const SurrogatePair& pair, const GdConfig& cfg,
                        const Eigen::VectorXd* beta_star) {
  const int m = pair.m;
  if (cfg.lambda < 0.0 || !(cfg.R > 0.0) || !(cfg.zeta > 0.0) || cfg.max_iters < 1)
    throw std::invalid_argument("solve_lasso_gd: invalid config");
  if (beta_star && beta_star->size() != m)
    throw std::invalid_argument("solve_lasso_gd: beta_star dimension mismatch");

  Eigen::VectorXd beta;
  if (cfg.beta0.size() == 0)
    beta = Eigen::VectorXd::Zero(m);
  else if (cfg.beta0.size() == m)
    beta = cfg.beta0.lpNorm<1>() <= cfg.R ? cfg.beta0 : project_l1_ball(cfg.beta0, cfg.R);
  else
    throw std::invalid_argument("solve_lasso_gd: beta0 dimension mismatch");

  auto objective = [&](const Eigen::VectorXd& b) {
    return 0.5 * b.dot(pair.Gamma_hat * b) - pair.gamma_hat.dot(b) + cfg.lambda * b.lpNorm<1>();
  };

  GdResult res;
  SolverTrace& trace = res.trace;
  std::vector<Eigen::VectorXd> iterates;
  const double phi0 = objective(beta);
  trace.objective.push_back(phi0);
  if (cfg.record_trace) iterates.push_back(beta);
  if (beta_star) trace.stat_error.push_back((beta - *beta_star).norm());

  std::deque<double> window{phi0};
  Eigen::VectorXd grad(m), v(m);
  int t = 0;
  for (; t < cfg.max_iters; ++t) {
    grad.noalias() = pair.Gamma_hat * beta;
    grad -= pair.gamma_hat;
    v = beta - grad / cfg.zeta;
    beta = composite_prox(v, cfg.lambda / cfg.zeta, cfg.R);

    const double phi = objective(beta);
    trace.objective.push_back(phi);
    if (cfg.record_trace) iterates.push_back(beta);
    if (beta_star) trace.stat_error.push_back((beta - *beta_star).norm());

    if (phi - phi0 > 1e6 * (1.0 + std::abs(phi0))) {
      trace.diverged = true;
      ++t;
      break;
    }

    // Window spread, not a lagged difference: oscillation with a period that
    // divides the window length must not read as convergence.
    window.push_back(phi);
    if (window.size() > 11) window.pop_front();
    if (window.size() == 11) {
      const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
      if (*hi - *lo <= cfg.tol_rel_obj * std::max(std::abs(*lo), 1e-12)) {
        trace.converged = true;
        ++t;
        break;
      }
    }
  }
  trace.iterations_run = t;

  res.beta_hat = beta;
  if (cfg.record_trace) {
    trace.opt_error.resize(iterates.size());
    for (std::size_t i = 0; i < iterates.size(); ++i)
      trace.opt_error[i] = (iterates[i] - beta).norm();
  }
  return res;
}

}  // namespace eiv
