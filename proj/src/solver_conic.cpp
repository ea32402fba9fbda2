#include "eiv/solver_conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace eiv {

double check_cone_constraint(const SurrogatePair& pair, const Eigen::VectorXd& beta, double t,
                             double mu, double omega) {
  if (beta.size() != pair.m)
    throw std::invalid_argument("check_cone_constraint: dimension mismatch");
  const double inf_res =
      (pair.gamma_hat - pair.Gamma_hat * beta).cwiseAbs().maxCoeff() - mu * t - omega;
  const double soc_res = beta.norm() - t;
  return std::max({0.0, inf_res, soc_res});
}

void project_inf_cone(Eigen::VectorXd& r, double& s, double mu, double omega) {
  const double amax = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  if (amax <= mu * s + omega) return;  // already inside (bound is then >= 0)
  if (mu == 0.0) {
    r = r.cwiseMax(-omega).cwiseMin(omega);
    return;
  }
  // d/ds of (s - s0)^2 + sum_i (|r_i| - mu*s - omega)_+^2 is continuous and
  // increasing; bisect it over s >= -omega/mu (where the cone section is
  // nonempty). The apex is optimal when the derivative is nonnegative there.
  const Eigen::Index m = r.size();
  const double s0 = s;
  auto dJ = [&](double sv) {
    const double bound = mu * sv + omega;
    double acc = sv - s0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ex = std::abs(r(i)) - bound;
      if (ex > 0.0) acc -= mu * ex;
    }
    return acc;
  };
  double lo = -omega / mu;
  if (dJ(lo) >= 0.0) {
    s = lo;
    r.setZero();
    return;
  }
  double hi = std::max(s0, (amax - omega) / mu) + 1.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (dJ(mid) < 0.0 ? lo : hi) = mid;
  }
  s = 0.5 * (lo + hi);
  const double bound = std::max(mu * s + omega, 0.0);
  r = r.cwiseMax(-bound).cwiseMin(bound);
}

namespace {

void project_soc(Eigen::VectorXd& v, double& t) {
  const double nv = v.norm();
  if (nv <= t) return;
  if (nv <= -t) {
    v.setZero();
    t = 0.0;
    return;
  }
  const double c = (nv + t) / 2.0;
  v *= c / nv;
  t = c;
}

}  // namespace

ConicSolver::ConicSolver(const SurrogatePair& pair) : pair_(pair) {
  const int m = pair.m;
  // Operator norm of Gamma_hat by power iteration on the PSD square; the
  // residual block is then rescaled to unit norm so the consensus blocks are
  // balanced.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m).normalized();
  double norm_est = 1.0;
  for (int i = 0; i < 60; ++i) {
    v = pair.Gamma_hat * (pair.Gamma_hat * v);
    norm_est = std::sqrt(v.norm());
    if (norm_est <= 0.0) break;
    v /= v.norm();
  }
  op_norm_ = std::max(norm_est, 1e-12);
  G_scaled_ = pair.Gamma_hat / op_norm_;
  Eigen::MatrixXd N = G_scaled_ * G_scaled_;
  N.diagonal().array() += 2.0;
  llt_.compute(N);
  if (llt_.info() != Eigen::Success)
    throw std::runtime_error("ConicSolver: normal matrix factorization failed");
  gamma_scale_ = std::max(pair.gamma_hat.cwiseAbs().maxCoeff(), 1e-12);
}

ConicSolution ConicSolver::solve(const ConicConfig& cfg) const {
  if (!(cfg.lambda_conic > 0.0)) throw std::invalid_argument("conic: lambda must be positive");
  if (cfg.mu < 0.0 || cfg.omega < 0.0)
    throw std::invalid_argument("conic: mu and omega must be >= 0");
  if (!(cfg.tol_feas > 0.0) || !(cfg.tol_gap > 0.0) || !(cfg.admm_rho > 0.0))
    throw std::invalid_argument("conic: tolerances and admm_rho must be positive");
  if (!(cfg.over_relax >= 1.0 && cfg.over_relax < 2.0))
    throw std::invalid_argument("conic: over_relax must be in [1, 2)");

  const int m = pair_.m;
  const double rho = cfg.admm_rho;
  // Variables live in units of beta/scale; the residual block additionally
  // carries 1/op_norm_ so every consensus copy sees an operator of norm ~1.
  const double scale = gamma_scale_;
  const double c = op_norm_;
  const Eigen::VectorXd g = pair_.gamma_hat / (scale * c);
  const double omega = cfg.omega / (scale * c);
  const double mu = cfg.mu / c;
  const double lam = cfg.lambda_conic;
  const double res_to_orig = scale * c;  // scaled residual block -> original units

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  double t = 0.0;
  Eigen::VectorXd w = beta, b = beta, r = Eigen::VectorXd::Zero(m);
  double a = 0.0, s = 0.0;
  Eigen::VectorXd u_w = Eigen::VectorXd::Zero(m), u_b = u_w, u_r = u_w;
  double u_a = 0.0, u_s = 0.0;

  Eigen::VectorXd Gb = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd rhs(m), w_prev(m), b_prev(m), r_prev(m), dz(m);
  Eigen::VectorXd resid(m), h_w(m), h_b(m), h_r(m), tmp(m);

  ConicSolution best;
  best.beta_hat = Eigen::VectorXd::Zero(m);
  best.feas_residual = std::numeric_limits<double>::infinity();
  best.objective = std::numeric_limits<double>::infinity();
  bool have_feasible = false;

  auto consider = [&](const Eigen::VectorXd& cand_beta, double cand_t, double feas) {
    const double obj = cand_beta.lpNorm<1>() + lam * cand_t;
    const bool feas_ok = feas <= cfg.tol_feas;
    const bool better = (feas_ok && !have_feasible) ||
                        (feas_ok == have_feasible &&
                         (feas_ok ? obj < best.objective : feas < best.feas_residual));
    if (better) {
      best.beta_hat = cand_beta;
      best.t_hat = cand_t;
      best.objective = obj;
      best.feas_residual = feas;
      have_feasible = have_feasible || feas_ok;
    }
  };

  double u_r_norm_mid = 0.0, u_r_norm_end = 0.0;
  int it = 0;
  bool converged = false;
  for (; it < cfg.max_iters; ++it) {
    // Smooth block.
    tmp = g - r + u_r;
    rhs = (w - u_w) + (b - u_b);
    rhs.noalias() += G_scaled_ * tmp;
    beta = rhs;
    llt_.solveInPlace(beta);
    t = ((a - u_a) + (s - u_s) - lam / rho) / 2.0;
    Gb.noalias() = G_scaled_ * beta;
    resid = g - Gb;

    // Proximal block, with over-relaxation on the consensus copies.
    w_prev.swap(w);
    b_prev.swap(b);
    r_prev.swap(r);
    const double a_prev = a, s_prev = s;
    const double al = cfg.over_relax;
    h_w = al * beta + (1.0 - al) * w_prev;
    h_b = al * beta + (1.0 - al) * b_prev;
    h_r = al * resid + (1.0 - al) * r_prev;
    const double h_a = al * t + (1.0 - al) * a_prev;
    const double h_s = al * t + (1.0 - al) * s_prev;
    w = h_w + u_w;
    w = w.array().sign() * (w.array().abs() - 1.0 / rho).max(0.0);
    b = h_b + u_b;
    a = h_a + u_a;
    project_soc(b, a);
    r = h_r + u_r;
    s = h_s + u_s;
    project_inf_cone(r, s, mu, omega);

    // Scaled duals.
    u_w += h_w - w;
    u_b += h_b - b;
    u_a += h_a - a;
    u_r += h_r - r;
    u_s += h_s - s;

    // Residuals of the splitting scheme. The dual residual needs a third
    // matrix-vector product, so it is only evaluated once the primal residual
    // and feasibility already pass.
    const double pri =
        std::sqrt((beta - w).squaredNorm() + (beta - b).squaredNorm() +
                  (resid - r).squaredNorm() + (t - a) * (t - a) + (t - s) * (t - s));

    const double inf_res = res_to_orig * (resid.cwiseAbs().maxCoeff() - mu * t - omega);
    const double soc_res = scale * (beta.norm() - t);
    const double feas_x = std::max({0.0, inf_res, soc_res});
    consider(beta, t, feas_x);

    if (it == cfg.max_iters / 2) u_r_norm_mid = u_r.norm();

    const double pri_scale =
        1.0 + std::max(std::sqrt(beta.squaredNorm() * 3.0 + 2.0 * t * t),
                       std::sqrt(w.squaredNorm() + b.squaredNorm() + r.squaredNorm() + a * a +
                                 s * s));
    if (pri <= cfg.tol_gap * pri_scale && feas_x <= cfg.tol_feas) {
      tmp = r - r_prev;
      dz = (w - w_prev) + (b - b_prev);
      dz.noalias() -= G_scaled_ * tmp;
      const double da = (a - a_prev) + (s - s_prev);
      const double dual = rho * std::sqrt(dz.squaredNorm() + da * da);
#ifdef EIV_CONIC_DEBUG
      if (it % 500 == 0)
        std::fprintf(stderr, "it=%d pri=%.3e dual=%.3e feas=%.3e obj=%.6f t=%.4f\n", it, pri,
                     dual, feas_x, beta.lpNorm<1>() + lam * t, t);
#endif
      if (dual <= cfg.tol_gap * pri_scale) {
        converged = true;
        ++it;
        break;
      }
    }
  }
  u_r_norm_end = u_r.norm();

  ConicSolution sol = best;
  sol.iterations = it;
  sol.converged = converged;
  if (converged) {
    sol.beta_hat = beta;
    sol.t_hat = t;
  }
  // Undo the scaling and report in original units.
  sol.beta_hat *= scale;
  sol.t_hat *= scale;
  sol.objective = sol.beta_hat.lpNorm<1>() + lam * sol.t_hat;
  sol.feas_residual = check_cone_constraint(pair_, sol.beta_hat, sol.t_hat, cfg.mu, cfg.omega);
  if (!converged && cfg.mu == 0.0 && sol.feas_residual > cfg.tol_feas &&
      u_r_norm_end > 2.0 * std::max(u_r_norm_mid, 1e-8))
    sol.infeasible = true;
  return sol;
}

ConicSolution solve_conic(const SurrogatePair& pair, const ConicConfig& cfg) {
  return ConicSolver(pair).solve(cfg);
}

}  // namespace eiv
