#include "eiv/constants.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace eiv {

RateScalars compute_rates(int m, int n, double K, double C0, double M_eps) {
  if (m < 2) throw std::invalid_argument("compute_rates: m must be >= 2");
  if (n < 1) throw std::invalid_argument("compute_rates: n must be >= 1");
  if (!(K > 0.0) || !(C0 > 0.0) || !(M_eps > 0.0))
    throw std::invalid_argument("compute_rates: K, C0, M_eps must be positive");
  RateScalars r;
  r.K = K;
  r.C0 = C0;
  r.M_eps = M_eps;
  const double logm = std::log(static_cast<double>(m));
  r.rho_n = C0 * K * std::sqrt(logm / n);
  r.r_mm = 2.0 * C0 * K * K * std::sqrt(logm / (static_cast<double>(m) * n));
  return r;
}

bool s0_condition_holds(const Covariance& A, double tau_B, int n, double C, int s,
                        long eigen_budget) {
  const int m = A.dim();
  const double logm = std::log(static_cast<double>(m));
  const double rhs = A.lambda_min() / (32.0 * C) * std::sqrt(n / logm);
  const double vp = A.sparse_eigenvalue(s, Extremum::max, eigen_budget).value + tau_B;
  return std::sqrt(static_cast<double>(s)) * vp <= rhs;
}

RegularityConstants compute_regularity(const Covariance& A, const Covariance& B, int n, double C,
                                       long eigen_budget) {
  if (n < 1) throw std::invalid_argument("compute_regularity: n must be positive");
  if (!(C > 0.0)) throw std::invalid_argument("compute_regularity: C must be positive");
  const int m = A.dim();
  if (m < 2) throw std::invalid_argument("compute_regularity: dim(A) must be >= 2");
  RegularityConstants reg;
  reg.C = C;
  reg.m = m;
  reg.n = n;
  reg.lambda_min_A = A.lambda_min();
  reg.lambda_max_A = A.lambda_max();
  if (reg.lambda_min_A <= 1e-10 * std::max(reg.lambda_max_A, 1.0))
    throw std::invalid_argument("compute_regularity: lambda_min(A) is numerically zero");
  reg.a_max = A.max_diagonal();
  reg.b_max = B.max_diagonal();
  reg.tau_B = B.trace() / static_cast<double>(n);

  // Feasible set of the s0 inequality is a prefix; scan with early exit.
  int s0 = 0;
  for (int s = 1; s <= m; ++s) {
    if (s0_condition_holds(A, reg.tau_B, n, C, s, eigen_budget))
      s0 = s;
    else
      break;
  }
  reg.s0 = std::max(1, s0);

  auto vp = [&](int s) {
    s = std::min(s, m);
    return A.sparse_eigenvalue(s, Extremum::max, eigen_budget).value + reg.tau_B;
  };
  reg.vp_s0 = vp(reg.s0);
  reg.vp_s0_plus1 = vp(reg.s0 + 1);
  reg.M_A = 64.0 * C * reg.vp_s0 / reg.lambda_min_A;
  reg.M_plus = 32.0 * C * reg.vp_s0_plus1 / reg.lambda_min_A;
  reg.alpha = (5.0 / 8.0) * reg.lambda_min_A;
  reg.tau_tol = (reg.lambda_min_A - reg.alpha) / reg.s0;

  const double normA = A.operator_norm();
  const double normB = B.operator_norm();
  reg.D0 = std::sqrt(reg.tau_B) + std::sqrt(reg.a_max);
  reg.D0_prime = std::sqrt(normB) + std::sqrt(reg.a_max);
  reg.D1 = A.frobenius_norm() / std::sqrt(static_cast<double>(m)) +
           B.frobenius_norm() / std::sqrt(static_cast<double>(n));
  reg.D2 = 2.0 * (normA + normB);
  reg.D_ora = 2.0 * (std::sqrt(normA) + std::sqrt(normB));
  reg.tau_B_plus_half = std::sqrt(reg.tau_B) + reg.D_ora / std::sqrt(static_cast<double>(m));
  return reg;
}

PenaltyPlan compute_penalty_plan(const RegularityConstants& reg, const RateScalars& rates,
                                 double beta_norm, double tau_hat_B, double C6,
                                 PenaltyVariant variant) {
  if (!std::isfinite(beta_norm) || !std::isfinite(tau_hat_B) || !std::isfinite(C6))
    throw std::invalid_argument("compute_penalty_plan: inputs must be finite");
  if (beta_norm < 0.0 || tau_hat_B < 0.0)
    throw std::invalid_argument("compute_penalty_plan: beta_norm and tau_hat_B must be >= 0");
  if (C6 < reg.D_ora)
    std::cerr << "compute_penalty_plan: C6 = " << C6 << " below recommended D_ora = " << reg.D_ora
              << "\n";
  PenaltyPlan plan;
  const double K = rates.K;
  plan.psi_basic = rates.C0 * reg.D2 * K * (K * beta_norm + rates.M_eps);
  plan.psi_oracle =
      rates.C0 * reg.D0_prime * K * (rates.M_eps + reg.tau_B_plus_half * K * beta_norm);
  const double sqrt_logm_over_n = rates.rho_n / (rates.C0 * K);
  plan.lambda_lasso = (variant == PenaltyVariant::basic ? 4.0 * plan.psi_basic
                                                        : 2.0 * plan.psi_oracle) *
                      sqrt_logm_over_n;
  plan.mu_basic = 2.0 * reg.D2 * K * rates.rho_n;
  plan.omega = reg.D0 * rates.M_eps * rates.rho_n;
  plan.tilde_tau_B_half = std::sqrt(tau_hat_B) + C6 * std::sqrt(rates.r_mm);
  plan.mu_oracle = reg.D0_prime * plan.tilde_tau_B_half * K * rates.rho_n;
  plan.C6 = C6;
  plan.beta_norm_bound = beta_norm;
  return plan;
}

ContractionPlan compute_contraction(double alpha_l, double alpha_u, double tau_l, double tau_u,
                                    int d, double zeta, double R) {
  if (d < 1) throw std::invalid_argument("compute_contraction: d must be >= 1");
  if (!(zeta > 0.0) || !(R > 0.0))
    throw std::invalid_argument("compute_contraction: zeta and R must be positive");
  if (zeta < alpha_u)
    throw std::invalid_argument("compute_contraction: zeta must be >= alpha_u");
  if (tau_l < 0.0 || tau_u < 0.0)
    throw std::invalid_argument("compute_contraction: tolerances must be >= 0");
  ContractionPlan p;
  p.alpha_l = alpha_l;
  p.alpha_u = alpha_u;
  p.tau_l = tau_l;
  p.tau_u = tau_u;
  p.zeta = zeta;
  p.d = d;
  p.R = R;
  p.nu = 64.0 * d * tau_u;
  p.alpha_l_bar = alpha_l - 64.0 * d * tau_l;
  if (p.alpha_l_bar <= 0.0) {
    p.infeasibility = "alpha_l - 64*d*tau_l <= 0";
    return p;
  }
  p.z = 128.0 * d * tau_u / p.alpha_l_bar;
  if (p.z >= 1.0) {
    p.infeasibility = "z = 128*d*tau_u/alpha_l_bar >= 1";
    return p;
  }
  p.kappa = (1.0 - p.alpha_l_bar / (4.0 * zeta) + p.z) / (1.0 - p.z);
  p.xi = 2.0 * std::max(tau_l, tau_u) * (p.alpha_l_bar / (4.0 * zeta) + 2.0 * p.z + 5.0) /
         (1.0 - p.z);
  if (p.kappa >= 1.0) {
    p.infeasibility = "kappa >= 1";
    return p;
  }
  p.feasible = true;
  return p;
}

ContractionPlan compute_contraction(const RegularityConstants& reg, int d, double zeta, double R) {
  const double alpha_u = (11.0 / 8.0) * reg.lambda_max_A;
  return compute_contraction(reg.alpha, alpha_u, reg.tau_tol, reg.tau_tol, d, zeta, R);
}

int iterations_to_tolerance(const ContractionPlan& plan, double phi_gap_0, double lambda,
                            double delta_sq) {
  if (!(plan.kappa > 0.0 && plan.kappa < 1.0))
    throw std::invalid_argument("iterations_to_tolerance: kappa must be in (0,1)");
  if (!(delta_sq > 0.0) || !(phi_gap_0 > 0.0))
    throw std::invalid_argument("iterations_to_tolerance: phi_gap_0 and delta_sq must be positive");
  if (!(lambda * plan.R / delta_sq > 1.0))
    throw std::invalid_argument("iterations_to_tolerance: lambda*R/delta_sq must exceed 1");
  const double log_inv_kappa = std::log(1.0 / plan.kappa);
  const double t1 = 2.0 * std::log(phi_gap_0 / delta_sq) / log_inv_kappa;
  const double t2 =
      std::log(std::log(lambda * plan.R / delta_sq)) * (1.0 + std::log(2.0) / log_inv_kappa);
  const double t = t1 + t2;
  return std::max(1, static_cast<int>(std::ceil(t)));
}

}  // namespace eiv
