#include "eiv/simulate.hpp"

#include <filesystem>
#include <set>
#include <stdexcept>

#include "eiv/csv.hpp"
#include "eiv/rng.hpp"

namespace eiv {

Eigen::VectorXd gen_beta(int m, int d, double length, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("gen_beta: m must be positive");
  if (d < 1 || d > m) throw std::invalid_argument("gen_beta: need 1 <= d <= m");
  if (!(length > 0.0)) throw std::invalid_argument("gen_beta: length must be positive");
  Rng rng(seed);
  std::set<int> support;
  while (static_cast<int>(support.size()) < d)
    support.insert(static_cast<int>(rng.next_below(m)));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(m);
  const double mag = length / std::sqrt(static_cast<double>(d));
  for (int j : support) beta(j) = rng.next_rademacher() * mag;
  return beta;
}

ProblemInstance gen_instance(std::shared_ptr<const Covariance> A,
                             std::shared_ptr<const Covariance> B,
                             const Eigen::VectorXd& beta_star, double sigma_eps,
                             EntryDist entry_dist, std::uint64_t seed) {
  if (!A) throw std::invalid_argument("gen_instance: A is required");
  if (!B) throw std::invalid_argument("gen_instance: B is required (use a zero matrix for B = 0)");
  if (sigma_eps < 0.0) throw std::invalid_argument("gen_instance: sigma_eps must be >= 0");
  const int m = A->dim();
  const int n = B->dim();
  if (beta_star.size() != m)
    throw std::invalid_argument("gen_instance: len(beta_star) must equal dim(A)");

  ProblemInstance inst;
  inst.A_spec = A;
  inst.B_spec = B;
  inst.seed = seed;
  inst.sigma_eps = sigma_eps;
  inst.beta_star = beta_star;
  inst.d = static_cast<int>((beta_star.array() != 0.0).count());

  Eigen::MatrixXd Z1(n, m), Z2(n, m);
  Rng rng(seed);
  if (entry_dist == EntryDist::gaussian) {
    rng.fill_gaussian(Z1);
    rng.fill_gaussian(Z2);
  } else {
    rng.fill_rademacher(Z1);
    rng.fill_rademacher(Z2);
  }

  inst.X0.noalias() = Z1 * A->sqrt();
  const bool b_zero = B->matrix().cwiseAbs().maxCoeff() == 0.0;
  if (b_zero)
    inst.W = Eigen::MatrixXd::Zero(n, m);
  else
    inst.W.noalias() = B->sqrt() * Z2;
  inst.X = inst.X0 + inst.W;

  inst.eps.resize(n);
  for (int i = 0; i < n; ++i) inst.eps(i) = sigma_eps * rng.next_gaussian();
  inst.y.noalias() = inst.X0 * beta_star;
  inst.y += inst.eps;
  return inst;
}

void save_instance(const ProblemInstance& inst, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  save_matrix_csv((base / "X.csv").string(), inst.X);
  save_vector_csv((base / "y.csv").string(), inst.y);
  save_vector_csv((base / "beta_star.csv").string(), inst.beta_star);
  KeyValueFile meta;
  meta.set("m", static_cast<std::int64_t>(inst.m()));
  meta.set("n", static_cast<std::int64_t>(inst.n()));
  meta.set("d", static_cast<std::int64_t>(inst.d));
  meta.set("seed", inst.seed);
  meta.set("sigma_eps", inst.sigma_eps);
  meta.set("beta_norm", inst.beta_star.norm());
  meta.set("beta_magnitudes", std::string("uniform_random_sign"));
  if (inst.B_spec) meta.set("tau_B", inst.B_spec->trace() / inst.n());
  meta.save((base / "meta.txt").string());
}

StoredInstance load_instance(const std::string& dir) {
  const std::filesystem::path base(dir);
  StoredInstance s;
  s.X = load_matrix_csv((base / "X.csv").string());
  s.y = load_vector_csv((base / "y.csv").string());
  s.beta_star = load_vector_csv((base / "beta_star.csv").string());
  KeyValueFile meta = KeyValueFile::load((base / "meta.txt").string());
  if (const auto* v = meta.find("seed")) s.seed = std::stoull(*v);
  if (const auto* v = meta.find("d")) s.d = std::stoi(*v);
  if (const auto* v = meta.find("sigma_eps")) s.sigma_eps = std::stod(*v);
  return s;
}

}  // namespace eiv
