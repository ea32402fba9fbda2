#include "eiv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "eiv/rng.hpp"

namespace eiv {

namespace {

double lower_margin(const Eigen::MatrixXd& G, double alpha, double tau,
                    const Eigen::VectorXd& theta) {
  const double l1 = theta.lpNorm<1>();
  return theta.dot(G * theta) - alpha * theta.squaredNorm() + tau * l1 * l1;
}

double upper_margin(const Eigen::MatrixXd& G, double smoothness, double tau,
                    const Eigen::VectorXd& theta) {
  const double l1 = theta.lpNorm<1>();
  return smoothness * theta.squaredNorm() + tau * l1 * l1 - theta.dot(G * theta);
}

template <typename MarginFn>
ReProbeResult falsify_re(const Eigen::MatrixXd& Gamma, ReCondition cond, double param, double tau,
                         int trials, std::uint64_t seed, MarginFn margin) {
  if (Gamma.rows() != Gamma.cols()) throw std::invalid_argument("falsify: Gamma must be square");
  const int m = static_cast<int>(Gamma.rows());
  const Eigen::MatrixXd G = (Gamma + Gamma.transpose()) / 2.0;

  ReProbeResult res;
  res.condition = cond;
  res.alpha_or_smoothness = param;
  res.tau = tau;
  res.worst_margin = std::numeric_limits<double>::infinity();

  auto consider = [&](const Eigen::VectorXd& theta) {
    const double v = margin(G, theta);
    ++res.samples_used;
    if (v < res.worst_margin) {
      res.worst_margin = v;
      res.witness = theta;
    }
  };

  // Coordinate directions.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    theta.setZero();
    theta(j) = 1.0;
    consider(theta);
  }

  // 2-sparse sign patterns, exhaustive for small m.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  res.exact = m <= 64;
  Rng rng(seed);
  auto pair_patterns = [&](int i, int j) {
    theta.setZero();
    theta(i) = inv_sqrt2;
    theta(j) = inv_sqrt2;
    consider(theta);
    theta(j) = -inv_sqrt2;
    consider(theta);
  };
  if (res.exact) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) pair_patterns(i, j);
  } else {
    for (int k = 0; k < std::max(trials / 4, m); ++k) {
      const int i = static_cast<int>(rng.next_below(m));
      int j = static_cast<int>(rng.next_below(m));
      while (j == i) j = static_cast<int>(rng.next_below(m));
      pair_patterns(i, j);
    }
  }

  // Eigenvectors.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  for (int j = 0; j < m; ++j) consider(es.eigenvectors().col(j));

  // Random directions, half sparse, half dense.
  const int max_support = std::min(m, 2 * static_cast<int>(std::ceil(std::sqrt(m))));
  for (int k = 0; k < trials; ++k) {
    theta.setZero();
    if (k % 2 == 0) {
      const int s = 1 + static_cast<int>(rng.next_below(max_support));
      std::set<int> support;
      while (static_cast<int>(support.size()) < s)
        support.insert(static_cast<int>(rng.next_below(m)));
      for (int j : support) theta(j) = rng.next_gaussian();
    } else {
      for (int j = 0; j < m; ++j) theta(j) = rng.next_gaussian();
    }
    const double norm = theta.norm();
    if (norm == 0.0) continue;
    theta /= norm;
    consider(theta);
  }
  return res;
}

}  // namespace

ReProbeResult falsify_lower_re(const Eigen::MatrixXd& Gamma, double alpha, double tau, int trials,
                               std::uint64_t seed) {
  if (!(alpha > 0.0) || tau < 0.0)
    throw std::invalid_argument("falsify_lower_re: need alpha > 0, tau >= 0");
  return falsify_re(Gamma, ReCondition::lower_re, alpha, tau, trials, seed,
                    [alpha, tau](const Eigen::MatrixXd& G, const Eigen::VectorXd& th) {
                      return lower_margin(G, alpha, tau, th);
                    });
}

ReProbeResult falsify_upper_re(const Eigen::MatrixXd& Gamma, double smoothness, double tau,
                               int trials, std::uint64_t seed) {
  if (!(smoothness > 0.0) || tau < 0.0)
    throw std::invalid_argument("falsify_upper_re: need smoothness > 0, tau >= 0");
  return falsify_re(Gamma, ReCondition::upper_re, smoothness, tau, trials, seed,
                    [smoothness, tau](const Eigen::MatrixXd& G, const Eigen::VectorXd& th) {
                      return upper_margin(G, smoothness, tau, th);
                    });
}

Eigen::VectorXd sample_cone_vector(int p, int d0, double k0, Rng& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  std::set<int> support;
  while (static_cast<int>(support.size()) < d0)
    support.insert(static_cast<int>(rng.next_below(p)));
  double l1_J = 0.0;
  for (int j : support) {
    x(j) = rng.next_gaussian();
    l1_J += std::abs(x(j));
  }
  const double nJ = x.norm();
  if (nJ > 0.0) {
    x /= nJ;
    l1_J /= nJ;
  }
  if (k0 > 0.0 && d0 < p) {
    // Budget theta*k0*||x_J||_1 spread over a random number of off-support
    // coordinates; theta in [0,1] covers the cone interior and boundary.
    const double budget = rng.next_double() * k0 * l1_J;
    const int spread = 1 + static_cast<int>(rng.next_below(std::min(p - d0, 64)));
    std::vector<int> off;
    for (int c = 0; c < spread; ++c) {
      int j = static_cast<int>(rng.next_below(p));
      if (support.count(j)) continue;
      off.push_back(j);
    }
    if (!off.empty()) {
      // Random convex split of the budget, random signs.
      std::vector<double> cuts(off.size());
      double total = 0.0;
      for (auto& c : cuts) {
        c = rng.next_double();
        total += c;
      }
      if (total > 0.0)
        for (std::size_t i = 0; i < off.size(); ++i)
          x(off[i]) = rng.next_rademacher() * budget * cuts[i] / total;
    }
  }
  return x;
}

std::pair<double, bool> estimate_re_constant(const Eigen::MatrixXd& design, int s0, double k0,
                                             long samples, std::uint64_t seed) {
  const int p = static_cast<int>(design.cols());
  if (s0 < 1 || s0 > p) throw std::invalid_argument("estimate_re_constant: need 1 <= s0 <= p");
  if (k0 < 0.0) throw std::invalid_argument("estimate_re_constant: k0 must be >= 0");
  double best = std::numeric_limits<double>::infinity();

  // Supported vectors (the k0 = 0 face of the cone): restricted smallest
  // singular value per support. Enumerate when feasible, else sample supports.
  long combos = 1;
  bool enumerable = true;
  for (int i = 1; i <= s0; ++i) {
    combos = combos * (p - s0 + i) / i;
    if (combos > std::max(samples, 10000L)) {
      enumerable = false;
      break;
    }
  }
  auto restricted_sv = [&](const std::vector<int>& J) {
    Eigen::MatrixXd sub(design.rows(), J.size());
    for (std::size_t c = 0; c < J.size(); ++c) sub.col(c) = design.col(J[c]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
    return svd.singularValues().minCoeff();
  };
  Rng rng(seed);
  if (enumerable) {
    std::vector<int> J(s0);
    std::iota(J.begin(), J.end(), 0);
    for (;;) {
      best = std::min(best, restricted_sv(J));
      int i = s0 - 1;
      while (i >= 0 && J[i] == p - s0 + i) --i;
      if (i < 0) break;
      ++J[i];
      for (int k = i + 1; k < s0; ++k) J[k] = J[k - 1] + 1;
    }
  } else {
    for (long c = 0; c < std::max(samples / 4, 1L); ++c) {
      std::set<int> S;
      while (static_cast<int>(S.size()) < s0) S.insert(static_cast<int>(rng.next_below(p)));
      best = std::min(best, restricted_sv(std::vector<int>(S.begin(), S.end())));
    }
  }

  // Within-cone samples; the ratio uses the best (largest ||v_J||) admissible
  // support, which for |J| <= s0 is the top-s0 coordinate set.
  for (long c = 0; c < samples; ++c) {
    Eigen::VectorXd v = sample_cone_vector(p, s0, k0, rng);
    std::vector<int> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + s0, idx.end(),
                      [&](int a, int b) { return std::abs(v(a)) > std::abs(v(b)); });
    double nJ2 = 0.0;
    for (int i = 0; i < s0; ++i) nJ2 += v(idx[i]) * v(idx[i]);
    if (nJ2 <= 0.0) continue;
    best = std::min(best, (design * v).norm() / std::sqrt(nJ2));
  }
  return {std::max(best, 0.0), enumerable && k0 == 0.0};
}

double estimate_lq_sensitivity(const Eigen::MatrixXd& Psi, int d0, double k0, double q,
                               long samples, std::uint64_t seed) {
  const int p = static_cast<int>(Psi.cols());
  if (d0 < 1 || d0 > p) throw std::invalid_argument("estimate_lq_sensitivity: need 1 <= d0 <= p");
  if (!(q >= 1.0 && q <= 2.0))
    throw std::invalid_argument("estimate_lq_sensitivity: need 1 <= q <= 2");
  double best = std::numeric_limits<double>::infinity();
  auto ratio = [&](const Eigen::VectorXd& v) {
    const double denom = v.lpNorm<Eigen::Infinity>() == 0.0
                             ? 0.0
                             : std::pow(v.cwiseAbs().array().pow(q).sum(), 1.0 / q);
    if (denom <= 0.0) return;
    best = std::min(best, (Psi * v).cwiseAbs().maxCoeff() / denom);
  };
  Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) {
    e.setZero();
    e(j) = 1.0;
    ratio(e);
  }
  Rng rng(seed);
  for (long c = 0; c < samples; ++c) ratio(sample_cone_vector(p, d0, k0, rng));
  return std::isfinite(best) ? best : 0.0;
}

bool cone_top_norm_check(const Eigen::VectorXd& x, int d0, double k0) {
  const int p = static_cast<int>(x.size());
  if (d0 < 1 || d0 > p) throw std::invalid_argument("cone_top_norm_check: need 1 <= d0 <= p");
  if (k0 < 0.0) throw std::invalid_argument("cone_top_norm_check: k0 must be >= 0");
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return std::abs(x(a)) > std::abs(x(b)); });
  double l1_top = 0.0, l2_top2 = 0.0;
  for (int i = 0; i < d0; ++i) {
    l1_top += std::abs(x(idx[i]));
    l2_top2 += x(idx[i]) * x(idx[i]);
  }
  const double l1_rest = x.lpNorm<1>() - l1_top;
  // Membership via the top-d0 support: if any support witnesses the cone
  // constraint, the top support does.
  if (l1_rest > k0 * l1_top + 1e-12 * std::max(1.0, x.lpNorm<1>()))
    throw std::invalid_argument("cone_top_norm_check: x is not in the cone");
  return std::sqrt(l2_top2) >= x.norm() / std::sqrt(1.0 + k0) - 1e-12;
}

}  // namespace eiv
