#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eiv/covariance.hpp"
#include "eiv/simulate.hpp"

namespace eiv {

enum class CovFamily { ar1, star_block, random_precision, identity };

struct CovModelSpec {
  CovFamily family = CovFamily::ar1;
  double rho = 0.3;       // ar1 / star_block correlation parameter
  int hub_block = 17;     // star_block
  double c_diag = 1.0;    // random_precision
  double w_min = 0.1;
  double w_max = 0.3;
  std::uint64_t seed = 1;  // random_precision graph seed
};

enum class EstimatorKind { lasso_gd, conic, both };

/// Grid specification of one experiment family. Grids multiply out to cells;
/// every (cell, trial) derives its seed from master_seed by hashing, so runs
/// are byte-reproducible with any worker count and cells are independent.
struct ExperimentConfig {
  CovModelSpec A_model;  // column covariance, dimension m
  CovModelSpec B_model;  // row correlation, dimension n, rescaled to each tau_B
  std::vector<int> m_values{256};
  std::vector<int> n_values{};
  std::vector<double> rescaled_n_values{};  // n = ceil(rho * d * log m); exclusive with n_values
  std::vector<double> tau_B_values{0.3};
  int d_value = 0;  // 0 means floor(sqrt(m))
  double beta_length = 5.0;
  double sigma_eps = 1.0;
  EntryDist entry_dist = EntryDist::gaussian;
  EstimatorKind estimator = EstimatorKind::lasso_gd;
  std::vector<double> f_grid{};              // empty means 0.05..0.80 step 0.05
  std::vector<std::string> zeta_presets{"zeta2"};  // zeta1|zeta2|zeta3
  std::vector<double> R_multipliers{1.0};
  int trials = 100;
  std::uint64_t master_seed = 0;
  std::string output_dir;  // empty: no files written
  bool redraw_beta_per_trial = false;
  int threads = 0;  // 0: EIV_THREADS env var, then hardware concurrency

  int gd_max_iters = 2000;
  double gd_tol = 1e-9;
  int conic_max_iters = 4000;
  double conic_tol_feas = 1e-6;
  double conic_tol_gap = 1e-6;
  double admm_rho = 1.0;
  double lambda_conic = 1.0;
};

struct ResultRow {
  std::string estimator;
  int m = 0, n = 0, d = 0;
  double tau_B = 0.0, rho_A = 0.0, rho_Bstar = 0.0;
  double f = 0.0;
  std::string zeta_preset;
  double R_mult = 1.0;
  int trials = 0;
  int failures = 0;
  double rel_l2_error = 0.0, rel_l2_stderr = 0.0;
  double rel_l1_error = 0.0, rel_l1_stderr = 0.0;
  double rescaled_n = 0.0;  // n / (d log m)
  double r_B = 0.0;         // effective rank tr(B)/||B||
  double runtime_ms = 0.0;  // informational; kept out of sweep.csv
};

/// Runs every grid cell x trial, aggregates means and standard errors, and
/// when output_dir is set writes sweep.csv (schema-versioned) plus timing.csv.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

void write_sweep_csv(const std::string& path, const std::vector<ResultRow>& rows);

struct TraceConfig {
  CovModelSpec A_model;
  CovModelSpec B_model;
  int m = 1024;
  int d = 10;
  double tau_B = 0.3;
  std::vector<double> rho_presets{1, 2, 3, 6, 12, 25};  // n = ceil(rho d log m)
  int inits = 10;
  double beta_length = 5.0;
  double sigma_eps = 1.0;
  double f = 0.2;
  std::string zeta_preset = "zeta2";
  double R_mult = 1.0;
  int max_iters = 1500;
  double gd_tol = 1e-9;
  std::uint64_t master_seed = 0;
  std::string output_dir;
  int threads = 0;
};

struct TraceCurve {
  double rho = 0.0;
  int n = 0;
  std::vector<double> log_opt_err;   // averaged over inits, clamped at log 1e-16
  std::vector<double> log_stat_err;
  double slope = 0.0;      // least-squares fit over the pre-plateau window
  double r_squared = 0.0;
  double plateau_stat = 0.0;  // mean of the last quarter of log_stat_err
  double final_stat = 0.0;
  int flagged_noncontract = 0;  // inits that diverged, stalled or did not contract
  int inits = 0;
};

/// One instance per preset, `inits` random feasible starting points, averaged
/// iterate error curves. Writes trace.csv and trace_summary.csv when
/// output_dir is set.
std::vector<TraceCurve> run_iterate_trace(const TraceConfig& cfg);

Covariance make_covariance(const CovModelSpec& model, int dim);

/// zeta1 = lambda_max + lambda_min/2, zeta2 = 1.5 lambda_max, zeta3 = 2 lambda_max.
double resolve_zeta(const std::string& preset, double lambda_min, double lambda_max);

int resolve_threads(int requested);

/// Subcommands: simulate, lasso, conic, sweep, trace, diagnose.
/// Exit codes: 0 ok, 2 configuration error, 3 solver non-convergence under --strict.
int run_cli(int argc, char** argv);

}  // namespace eiv
