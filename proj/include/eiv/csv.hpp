#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace eiv {

/// Dense matrix CSV, row-major, one row per line. When `dim_header` is set a
/// first comment line of the form "# dim=<rows>" is written / expected.
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& M, bool dim_header = false);
Eigen::MatrixXd load_matrix_csv(const std::string& path);

void save_vector_csv(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd load_vector_csv(const std::string& path);

/// Fixed-format double, used everywhere output must be byte-reproducible.
std::string format_double(double x);

/// key = value lines; insertion order preserved on write.
struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  const std::string* find(const std::string& key) const;

  void save(const std::string& path) const;
  static KeyValueFile load(const std::string& path);
};

}  // namespace eiv
