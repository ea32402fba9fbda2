#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace eiv {

enum class Extremum { max, min };

struct SparseEigenResult {
  double value = 0.0;
  bool exact = false;  // true when every support of the given size was enumerated
};

/// Symmetric positive-semidefinite covariance matrix with a lazily computed,
/// shared eigendecomposition. Immutable after construction; copies share the
/// cache. Safe for concurrent reads.
class Covariance {
 public:
  /// Validates symmetry (1e-12 relative) up front; PSD is checked when the
  /// eigendecomposition is first computed.
  explicit Covariance(Eigen::MatrixXd matrix);

  /// AR(1) correlation: entry (i,j) = rho^|i-j|, unit diagonal.
  static Covariance ar1(int dim, double rho);

  /// Block-diagonal star covariance: blocks of `hub_block` coordinates whose
  /// first coordinate is the hub; within a block S_ij = rho on hub edges and
  /// rho^2 between leaves, S_ii = 1. Coordinates past the last full block are
  /// independent unit-variance singletons.
  static Covariance star_block(int dim, double rho, int hub_block);

  /// Inverse of a randomly perturbed diagonal precision matrix: start from
  /// c_diag*I, apply ceil(dim*log(dim)) distinct random edge updates
  /// (subtract w from the two off-diagonal entries, add w to both diagonals,
  /// w uniform on [w_min, w_max]), then invert. Deterministic given the seed.
  static Covariance random_precision(int dim, double c_diag, double w_min, double w_max,
                                     std::uint64_t seed);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

  double trace() const { return matrix_.trace(); }
  double frobenius_norm() const { return matrix_.norm(); }
  double max_diagonal() const { return matrix_.diagonal().maxCoeff(); }

  /// Eigenvalues in nonincreasing order.
  const Eigen::VectorXd& eigenvalues() const;
  const Eigen::MatrixXd& eigenvectors() const;
  double lambda_max() const { return eigenvalues()(0); }
  double lambda_min() const { return eigenvalues()(dim() - 1); }
  double operator_norm() const { return lambda_max(); }

  /// Symmetric PSD square root (negative eigenvalues clamped to zero).
  /// Rejects eigenvalues below -1e-8 * lambda_max.
  const Eigen::MatrixXd& sqrt() const;

  /// Extremal value of t^T M t over d-sparse unit vectors t. Exact by support
  /// enumeration when C(dim, d) <= budget, otherwise the best value over
  /// `budget` sampled supports plus greedy candidates (exact = false).
  SparseEigenResult sparse_eigenvalue(int d, Extremum which, long budget = 2000) const;

  void save_csv(const std::string& path) const;
  static Covariance load_csv(const std::string& path);

 private:
  struct Cache;
  Eigen::MatrixXd matrix_;
  std::shared_ptr<Cache> cache_;

  const Cache& eigen_cache() const;

  friend Covariance scale_to_trace(const Covariance& B, int n, double tau_B_target);
};

/// B * (tau_B_target * n / tr(B)), so that tr(B')/n equals the target exactly.
Covariance scale_to_trace(const Covariance& B, int n, double tau_B_target);

}  // namespace eiv
