#include "eiv/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "eiv/csv.hpp"
#include "eiv/rng.hpp"

namespace eiv {

struct Covariance::Cache {
  mutable std::mutex mu;
  std::optional<Eigen::VectorXd> eigenvalues;   // nonincreasing
  std::optional<Eigen::MatrixXd> eigenvectors;  // columns match eigenvalue order
  std::optional<Eigen::MatrixXd> sqrt;
};

Covariance::Covariance(Eigen::MatrixXd matrix)
    : matrix_(std::move(matrix)), cache_(std::make_shared<Cache>()) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1)
    throw std::invalid_argument("covariance matrix must be square and nonempty");
  const double scale = matrix_.cwiseAbs().maxCoeff();
  const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0))
    throw std::invalid_argument("covariance matrix is not symmetric");
  // Exact symmetry from here on.
  matrix_ = ((matrix_ + matrix_.transpose()) / 2.0).eval();
}

const Covariance::Cache& Covariance::eigen_cache() const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  if (!cache_->eigenvalues) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    // Eigen returns increasing order; flip to nonincreasing.
    cache_->eigenvalues = es.eigenvalues().reverse().eval();
    cache_->eigenvectors = es.eigenvectors().rowwise().reverse().eval();
    const int d = dim();
    const double lmax = std::max((*cache_->eigenvalues)(0), 0.0);
    if ((*cache_->eigenvalues)(d - 1) < -1e-10 * std::max(lmax, 1.0))
      throw std::invalid_argument("covariance matrix is not numerically PSD");
  }
  return *cache_;
}

const Eigen::VectorXd& Covariance::eigenvalues() const { return *eigen_cache().eigenvalues; }
const Eigen::MatrixXd& Covariance::eigenvectors() const { return *eigen_cache().eigenvectors; }

const Eigen::MatrixXd& Covariance::sqrt() const {
  const Cache& c = eigen_cache();
  std::lock_guard<std::mutex> lock(c.mu);
  if (!c.sqrt) {
    const Eigen::VectorXd& ev = *c.eigenvalues;
    const double lmax = std::max(ev(0), 0.0);
    if (ev(dim() - 1) < -1e-8 * std::max(lmax, 1.0))
      throw std::invalid_argument("matrix square root: eigenvalue too negative");
    Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd S = *c.eigenvectors * root.asDiagonal() * c.eigenvectors->transpose();
    cache_->sqrt = ((S + S.transpose()) / 2.0).eval();
  }
  return *c.sqrt;
}

Covariance Covariance::ar1(int dim, double rho) {
  if (dim < 1) throw std::invalid_argument("ar1: dim must be positive");
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1: |rho| must be < 1");
  Eigen::MatrixXd M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = std::pow(rho, std::abs(i - j));
  return Covariance(std::move(M));
}

Covariance Covariance::star_block(int dim, double rho, int hub_block) {
  if (dim < 1) throw std::invalid_argument("star_block: dim must be positive");
  if (hub_block < 2) throw std::invalid_argument("star_block: hub_block must be >= 2");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("star_block: rho must be in (0,1)");
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(dim, dim);
  const int nblocks = dim / hub_block;
  for (int b = 0; b < nblocks; ++b) {
    const int base = b * hub_block;  // hub at `base`, leaves after it
    for (int i = 0; i < hub_block; ++i)
      for (int j = 0; j < hub_block; ++j) {
        if (i == j) continue;
        const bool hub_edge = (i == 0 || j == 0);
        M(base + i, base + j) = hub_edge ? rho : rho * rho;
      }
  }
  return Covariance(std::move(M));
}

Covariance Covariance::random_precision(int dim, double c_diag, double w_min, double w_max,
                                        std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("random_precision: dim must be positive");
  if (!(c_diag > 0.0)) throw std::invalid_argument("random_precision: c_diag must be positive");
  if (!(0.0 < w_min && w_min < w_max))
    throw std::invalid_argument("random_precision: need 0 < w_min < w_max");
  Eigen::MatrixXd Pi = c_diag * Eigen::MatrixXd::Identity(dim, dim);
  const long total_pairs = static_cast<long>(dim) * (dim - 1) / 2;
  long edges = static_cast<long>(std::ceil(dim * std::log(static_cast<double>(dim))));
  edges = std::min(edges, total_pairs);
  Rng rng(seed);
  std::set<std::pair<int, int>> chosen;
  while (static_cast<long>(chosen.size()) < edges) {
    int i = static_cast<int>(rng.next_below(dim));
    int j = static_cast<int>(rng.next_below(dim));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (!chosen.insert({i, j}).second) continue;
    const double w = rng.next_uniform(w_min, w_max);
    Pi(i, j) -= w;
    Pi(j, i) -= w;
    Pi(i, i) += w;
    Pi(j, j) += w;
  }
  // Pi = c_diag*I + (weighted graph Laplacian), hence positive definite.
  Eigen::LLT<Eigen::MatrixXd> llt(Pi);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("random_precision: precision matrix not positive definite");
  Eigen::MatrixXd B = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  B = ((B + B.transpose()) / 2.0).eval();
  return Covariance(std::move(B));
}

namespace {

double support_extremum(const Eigen::MatrixXd& M, const std::vector<int>& J, Extremum which) {
  const int k = static_cast<int>(J.size());
  Eigen::MatrixXd sub(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) sub(a, b) = M(J[a], J[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
  return which == Extremum::max ? es.eigenvalues().maxCoeff() : es.eigenvalues().minCoeff();
}

// C(n, k) saturating at `cap`.
long binomial_capped(int n, int k, long cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long r = 1;
  for (int i = 1; i <= k; ++i) {
    if (r > cap / n) return cap + 1;
    r = r * (n - k + i) / i;
    if (r > cap) return cap + 1;
  }
  return r;
}

}  // namespace

SparseEigenResult Covariance::sparse_eigenvalue(int d, Extremum which, long budget) const {
  const int m = dim();
  if (d < 1 || d > m) throw std::invalid_argument("sparse_eigenvalue: need 1 <= d <= dim");
  if (d == 1) {
    return {which == Extremum::max ? matrix_.diagonal().maxCoeff()
                                   : matrix_.diagonal().minCoeff(),
            true};
  }
  if (d == m) return {which == Extremum::max ? lambda_max() : lambda_min(), true};

  const bool exhaustive = binomial_capped(m, d, budget) <= budget;
  double best = which == Extremum::max ? -std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<int>& J) {
    const double v = support_extremum(matrix_, J, which);
    best = which == Extremum::max ? std::max(best, v) : std::min(best, v);
  };

  if (exhaustive) {
    std::vector<int> J(d);
    for (int i = 0; i < d; ++i) J[i] = i;
    for (;;) {
      consider(J);
      int i = d - 1;
      while (i >= 0 && J[i] == m - d + i) --i;
      if (i < 0) break;
      ++J[i];
      for (int k = i + 1; k < d; ++k) J[k] = J[k - 1] + 1;
    }
    return {best, true};
  }

  // Greedy seeds: extreme diagonal entries and contiguous windows (good for
  // banded structure), then random supports. Internally seeded so the result
  // is deterministic for fixed (d, which, budget).
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return which == Extremum::max ? matrix_(a, a) > matrix_(b, b) : matrix_(a, a) < matrix_(b, b);
  });
  consider(std::vector<int>(idx.begin(), idx.begin() + d));
  for (int start = 0; start + d <= m; start += std::max(1, d / 2)) {
    std::vector<int> J(d);
    for (int i = 0; i < d; ++i) J[i] = start + i;
    consider(J);
  }

  Rng rng(derive_stream(0x5ea15eedULL, "sparse_eigen", static_cast<std::uint64_t>(d),
                        static_cast<std::uint64_t>(which == Extremum::max ? 1 : 0)));
  for (long s = 0; s < budget; ++s) {
    std::vector<int> J;
    J.reserve(d);
    std::set<int> seen;
    while (static_cast<int>(J.size()) < d) {
      int c = static_cast<int>(rng.next_below(m));
      if (seen.insert(c).second) J.push_back(c);
    }
    consider(J);
  }
  return {best, false};
}

void Covariance::save_csv(const std::string& path) const { save_matrix_csv(path, matrix_, true); }

Covariance Covariance::load_csv(const std::string& path) {
  return Covariance(load_matrix_csv(path));
}

Covariance scale_to_trace(const Covariance& B, int n, double tau_B_target) {
  if (n < 1) throw std::invalid_argument("scale_to_trace: n must be positive");
  if (!(tau_B_target > 0.0)) throw std::invalid_argument("scale_to_trace: target must be positive");
  const double tr = B.trace();
  if (!(tr > 0.0)) throw std::invalid_argument("scale_to_trace: tr(B) must be positive");
  const double factor = tau_B_target * static_cast<double>(n) / tr;
  Covariance scaled(B.matrix() * factor);
  // A scalar multiple shares the eigenvectors; reuse any spectral work the
  // source has already done instead of re-decomposing.
  {
    std::lock_guard<std::mutex> lock(B.cache_->mu);
    if (B.cache_->eigenvalues) {
      std::lock_guard<std::mutex> lock2(scaled.cache_->mu);
      scaled.cache_->eigenvalues = (*B.cache_->eigenvalues * factor).eval();
      scaled.cache_->eigenvectors = *B.cache_->eigenvectors;
      if (B.cache_->sqrt) scaled.cache_->sqrt = (*B.cache_->sqrt * std::sqrt(factor)).eval();
    }
  }
  return scaled;
}

}  // namespace eiv
