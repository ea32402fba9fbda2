#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "eiv/covariance.hpp"

namespace eiv {

enum class EntryDist { gaussian, rademacher };

/// One draw from the additive measurement-error model
///   X = X0 + W,  X0 = Z1 A^{1/2},  W = B^{1/2} Z2,  y = X0 beta* + eps.
struct ProblemInstance {
  Eigen::MatrixXd X0, W, X;  // n x m
  Eigen::VectorXd y, eps;    // n
  Eigen::VectorXd beta_star; // m
  std::shared_ptr<const Covariance> A_spec;  // m x m
  std::shared_ptr<const Covariance> B_spec;  // n x n, may be null for B = 0
  std::uint64_t seed = 0;
  int d = 0;
  double sigma_eps = 0.0;

  int n() const { return static_cast<int>(X.rows()); }
  int m() const { return static_cast<int>(X.cols()); }
};

/// d-sparse vector with uniformly chosen support, equal magnitudes and random
/// signs, scaled so ||beta||_2 == length exactly.
Eigen::VectorXd gen_beta(int m, int d, double length, std::uint64_t seed);

/// A null B_spec stands for B = 0 (error-free measurement limit).
ProblemInstance gen_instance(std::shared_ptr<const Covariance> A,
                             std::shared_ptr<const Covariance> B,
                             const Eigen::VectorXd& beta_star, double sigma_eps,
                             EntryDist entry_dist, std::uint64_t seed);

/// Writes X.csv, y.csv, beta_star.csv and a meta key-value file into `dir`.
void save_instance(const ProblemInstance& inst, const std::string& dir);

/// The observed part of a stored instance (X0/W are not serialized).
struct StoredInstance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd beta_star;
  std::uint64_t seed = 0;
  int d = 0;
  double sigma_eps = 0.0;
};

StoredInstance load_instance(const std::string& dir);

}  // namespace eiv
