#pragma once

#include <string>

#include "eiv/covariance.hpp"

namespace eiv {

/// Dimension-dependent rate scalars shared by every penalty formula.
struct RateScalars {
  double rho_n = 0.0;   // C0 * K * sqrt(log m / n)
  double r_mm = 0.0;    // 2 * C0 * K^2 * sqrt(log m / (m n))
  double K = 1.0;       // psi_2 constant of the design entries
  double C0 = 1.0;      // user constant
  double M_eps = 1.0;   // psi_2 bound of the response noise
};

RateScalars compute_rates(int m, int n, double K = 1.0, double C0 = 1.0, double M_eps = 1.0);

/// Spectral and regularity quantities of a covariance pair (A, B) at sample
/// size n. All formulas follow the calibration used by the estimation and
/// convergence guarantees; C is the single user constant (default 1).
struct RegularityConstants {
  double lambda_min_A = 0.0;
  double lambda_max_A = 0.0;
  double a_max = 0.0;
  double b_max = 0.0;
  double tau_B = 0.0;         // tr(B)/n
  int s0 = 1;                 // largest s with sqrt(s)*vp(s) <= lambda_min/(32C)*sqrt(n/log m)
  double M_A = 0.0;           // 64*C*vp(s0)/lambda_min
  double M_plus = 0.0;        // 32*C*vp(s0+1)/lambda_min
  double vp_s0 = 0.0;         // rho_max(s0, A) + tau_B
  double vp_s0_plus1 = 0.0;
  double alpha = 0.0;         // (5/8)*lambda_min
  double tau_tol = 0.0;       // (3/8)*lambda_min/s0
  double D0 = 0.0;            // sqrt(tau_B) + sqrt(a_max)
  double D0_prime = 0.0;      // sqrt(||B||) + sqrt(a_max)
  double D1 = 0.0;            // ||A||_F/sqrt(m) + ||B||_F/sqrt(n)
  double D2 = 0.0;            // 2(||A|| + ||B||)
  double D_ora = 0.0;         // 2(sqrt(||A||) + sqrt(||B||))
  double tau_B_plus_half = 0.0;  // sqrt(tau_B) + D_ora/sqrt(m)
  double C = 1.0;
  int m = 0;
  int n = 0;
};

/// True when sqrt(s)*(rho_max(s,A)+tau_B) <= lambda_min(A)/(32C)*sqrt(n/log m).
bool s0_condition_holds(const Covariance& A, double tau_B, int n, double C, int s,
                        long eigen_budget = 256);

/// Rejects lambda_min(A) <= 1e-10 * lambda_max(A). s0 is found by linear scan
/// from s = 1 (the feasible set is a prefix since vp is nondecreasing) and
/// clamped to [1, m].
RegularityConstants compute_regularity(const Covariance& A, const Covariance& B, int n,
                                       double C = 1.0, long eigen_budget = 256);

enum class PenaltyVariant { basic, oracle };

struct PenaltyPlan {
  double psi_basic = 0.0;    // C0*D2*K*(K*||beta*|| + M_eps)
  double psi_oracle = 0.0;   // C0*D0'*K*(M_eps + tau_B^{+/2}*K*||beta*||)
  double lambda_lasso = 0.0; // 4*psi_basic resp. 2*psi_oracle, times sqrt(log m/n)
  double mu_basic = 0.0;     // 2*D2*K*rho_n
  double omega = 0.0;        // D0*M_eps*rho_n
  double mu_oracle = 0.0;    // D0'*tilde_tau_B^{1/2}*K*rho_n
  double tilde_tau_B_half = 0.0;  // sqrt(tau_hat_B) + C6*sqrt(r_mm)
  double C6 = 0.0;
  double beta_norm_bound = 0.0;
};

/// C6 >= D_ora is recommended; a smaller value warns on stderr but proceeds.
PenaltyPlan compute_penalty_plan(const RegularityConstants& reg, const RateScalars& rates,
                                 double beta_norm, double tau_hat_B, double C6,
                                 PenaltyVariant variant);

/// Contraction quantities of the composite gradient iteration. When the
/// sample size is too small the construction is marked infeasible and
/// `infeasibility` names the violated inequality.
struct ContractionPlan {
  double alpha_l = 0.0;      // RSC curvature
  double alpha_u = 0.0;      // RSM smoothness
  double tau_l = 0.0;
  double tau_u = 0.0;
  double zeta = 0.0;
  int d = 1;
  double R = 0.0;
  double nu = 0.0;           // 64 * d * tau_u
  double alpha_l_bar = 0.0;  // alpha_l - 64 * d * tau_l
  double z = 0.0;            // 128 * d * tau_u / alpha_l_bar
  double kappa = 0.0;        // (1 - alpha_l_bar/(4 zeta) + z) / (1 - z)
  double xi = 0.0;           // 2*max(tau_l,tau_u)*(alpha_l_bar/(4 zeta) + 2z + 5)/(1-z)
  double delta_sq = 0.0;
  bool feasible = false;
  std::string infeasibility;
};

ContractionPlan compute_contraction(double alpha_l, double alpha_u, double tau_l, double tau_u,
                                    int d, double zeta, double R);

/// Uses alpha_l = reg.alpha, alpha_u = (11/8)*lambda_max(A) and
/// tau_l = tau_u = reg.tau_tol.
ContractionPlan compute_contraction(const RegularityConstants& reg, int d, double zeta, double R);

/// ceil of 2*log(phi_gap_0/delta^2)/log(1/kappa)
///         + loglog(lambda*R/delta^2) * (1 + log 2/log(1/kappa)), floored at 1.
/// Rejects kappa outside (0,1).
int iterations_to_tolerance(const ContractionPlan& plan, double phi_gap_0, double lambda,
                            double delta_sq);

}  // namespace eiv
