#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Core>

namespace eiv {

enum class ReCondition { lower_re, upper_re, re_classic, lq_sensitivity };

/// Outcome of a restricted-eigenvalue falsification pass. This module is a
/// falsifier, not a certifier: a nonnegative worst margin only means no
/// violation was found among the probed directions (exact == true when the
/// 1- and 2-sparse sign patterns were fully enumerated). A reported violation
/// is certified: re-evaluating the witness reproduces the margin to 1e-10.
struct ReProbeResult {
  ReCondition condition = ReCondition::lower_re;
  double alpha_or_smoothness = 0.0;
  double tau = 0.0;
  double worst_margin = 0.0;
  Eigen::VectorXd witness;
  bool exact = false;
  long samples_used = 0;
};

/// Margin of theta'Gamma theta >= alpha*||theta||_2^2 - tau*||theta||_1^2 over
/// coordinate vectors, 2-sparse sign patterns, eigenvectors and `trials`
/// random unit directions (mixed sparse/dense). Gamma is symmetrized first.
ReProbeResult falsify_lower_re(const Eigen::MatrixXd& Gamma, double alpha, double tau, int trials,
                               std::uint64_t seed);

/// Same probe for theta'Gamma theta <= smoothness*||theta||_2^2 + tau*||theta||_1^2.
ReProbeResult falsify_upper_re(const Eigen::MatrixXd& Gamma, double smoothness, double tau,
                               int trials, std::uint64_t seed);

/// Upper-bound estimate of 1/K(s0, k0, design) = min over supports |J| <= s0
/// and the cone {||v_{J^c}||_1 <= k0 ||v_J||_1} of ||design*v||_2 / ||v_J||_2.
/// Enumerates all supports (restricted singular values) when C(p, s0) is
/// small, and adds random within-cone and extreme-ray samples; a sampled
/// minimum can only overestimate the true constant. exact only for the fully
/// enumerable k0 = 0 case.
std::pair<double, bool> estimate_re_constant(const Eigen::MatrixXd& design, int s0, double k0,
                                             long samples, std::uint64_t seed);

/// Sampled upper bound on the lq-sensitivity
///   kappa_q(d0, k0) = min over the cone of ||Psi*Delta||_inf / ||Delta||_q.
double estimate_lq_sensitivity(const Eigen::MatrixXd& Psi, int d0, double k0, double q,
                               long samples, std::uint64_t seed);

/// Requires x in the cone W(d0, k0) and checks
/// ||x_{T0}||_2 >= ||x||_2 / sqrt(1 + k0) for T0 the d0 largest |x_i|.
bool cone_top_norm_check(const Eigen::VectorXd& x, int d0, double k0);

/// Sample a vector of dimension p from the cone W(d0, k0): uniform support J,
/// unit-sphere mass on J, l1 mass theta*k0*||x_J||_1 (theta uniform on [0,1])
/// spread over random off-support coordinates. Shared by the probes above and
/// exposed for tests.
Eigen::VectorXd sample_cone_vector(int p, int d0, double k0, class Rng& rng);

}  // namespace eiv
