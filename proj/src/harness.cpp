#include "eiv/harness.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "eiv/constants.hpp"
#include "eiv/csv.hpp"
#include "eiv/rng.hpp"
#include "eiv/solver_conic.hpp"
#include "eiv/solver_gd.hpp"
#include "eiv/surrogate.hpp"

namespace eiv {

namespace {

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

void parallel_for(int n_tasks, int threads, const std::function<void(int)>& fn) {
  if (n_tasks <= 0) return;
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int extra = std::min(threads, n_tasks) - 1;
  std::vector<std::thread> pool;
  pool.reserve(std::max(extra, 0));
  for (int i = 0; i < extra; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct LinearFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& y, std::size_t count) {
  LinearFit fit;
  if (count < 2) return fit;
  const double n = static_cast<double>(count);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom <= 0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < count; ++i) {
    const double pred = intercept + fit.slope * static_cast<double>(i);
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// Iterations before the curve settles within one log unit of its final level.
std::size_t pre_plateau_window(const std::vector<double>& log_err) {
  if (log_err.size() < 3) return log_err.size();
  const double floor_level = log_err.back() + 1.0;
  std::size_t w = 0;
  while (w < log_err.size() && log_err[w] > floor_level) ++w;
  if (w < 3) w = std::min<std::size_t>(std::max<std::size_t>(3, log_err.size() / 4),
                                       log_err.size());
  return w;
}

constexpr double kLogFloor = 1e-16;

double safe_log(double x) { return std::log(std::max(x, kLogFloor)); }

struct Stats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
};

Stats mean_stderr(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) /
                          static_cast<double>(xs.size()));
  } else {
    s.stderr_ = 0.0;
  }
  return s;
}

}  // namespace

Covariance make_covariance(const CovModelSpec& model, int dim) {
  switch (model.family) {
    case CovFamily::ar1:
      return Covariance::ar1(dim, model.rho);
    case CovFamily::star_block:
      return Covariance::star_block(dim, model.rho, model.hub_block);
    case CovFamily::random_precision:
      return Covariance::random_precision(dim, model.c_diag, model.w_min, model.w_max, model.seed);
    case CovFamily::identity:
      return Covariance(Eigen::MatrixXd::Identity(dim, dim));
  }
  throw std::invalid_argument("make_covariance: unknown family");
}

double resolve_zeta(const std::string& preset, double lambda_min, double lambda_max) {
  if (preset == "zeta1") return lambda_max + 0.5 * lambda_min;
  if (preset == "zeta2") return 1.5 * lambda_max;
  if (preset == "zeta3") return 2.0 * lambda_max;
  throw std::invalid_argument("unknown zeta preset: " + preset);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EIV_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct DataCell {
  int m = 0, n = 0, d = 0;
  double tau_B = 0.0;
  std::shared_ptr<const Covariance> A;
  std::shared_ptr<const Covariance> B;   // already scaled to tau_B
  Eigen::VectorXd beta_star;             // empty when redrawn per trial
  double D0 = 0.0, D0_prime = 0.0;
  double zeta1 = 0.0, zeta2 = 0.0, zeta3 = 0.0;
  double r_B = 0.0;
};

struct SolverVariant {
  EstimatorKind kind = EstimatorKind::lasso_gd;
  double f = 0.0;
  std::string zeta_preset;  // lasso only
  double R_mult = 1.0;      // lasso only
};

struct TrialOutcome {
  double rel_l1 = 0.0, rel_l2 = 0.0;
  bool failed = false;
  double ms = 0.0;
};

std::vector<double> default_f_grid() {
  std::vector<double> f;
  for (int i = 1; i <= 16; ++i) f.push_back(0.05 * i);
  return f;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("run_sweep: trials must be >= 1");
  if (cfg.m_values.empty()) throw std::invalid_argument("run_sweep: m grid is empty");
  if (cfg.n_values.empty() == cfg.rescaled_n_values.empty())
    throw std::invalid_argument("run_sweep: exactly one of n grid / rescaled n grid is required");
  if (!cfg.tau_B_values.empty() && cfg.zeta_presets.empty())
    throw std::invalid_argument("run_sweep: zeta preset list is empty");
  if (cfg.R_multipliers.empty()) throw std::invalid_argument("run_sweep: R multiplier grid empty");
  const std::vector<double> f_grid = cfg.f_grid.empty() ? default_f_grid() : cfg.f_grid;
  const int threads = resolve_threads(cfg.threads);

  // Expand solver variants.
  std::vector<SolverVariant> variants;
  const bool want_lasso =
      cfg.estimator == EstimatorKind::lasso_gd || cfg.estimator == EstimatorKind::both;
  const bool want_conic =
      cfg.estimator == EstimatorKind::conic || cfg.estimator == EstimatorKind::both;
  for (double f : f_grid) {
    if (want_lasso)
      for (const auto& zp : cfg.zeta_presets)
        for (double rm : cfg.R_multipliers)
          variants.push_back({EstimatorKind::lasso_gd, f, zp, rm});
    if (want_conic) variants.push_back({EstimatorKind::conic, f, "", 1.0});
  }

  // Distinct covariance inputs, built in parallel, then cells.
  std::map<int, std::shared_ptr<Covariance>> A_by_m;
  std::map<int, std::shared_ptr<Covariance>> Bstar_by_n;
  std::vector<DataCell> cells;
  for (int m : cfg.m_values) {
    const int d = cfg.d_value > 0 ? cfg.d_value : static_cast<int>(std::floor(std::sqrt(m)));
    std::vector<int> ns = cfg.n_values;
    if (ns.empty())
      for (double rho : cfg.rescaled_n_values)
        ns.push_back(static_cast<int>(std::ceil(rho * d * std::log(static_cast<double>(m)))));
    for (int n : ns) {
      if (n < 2) throw std::invalid_argument("run_sweep: n must be >= 2");
      A_by_m.emplace(m, nullptr);
      Bstar_by_n.emplace(n, nullptr);
      for (double tau : cfg.tau_B_values) {
        DataCell c;
        c.m = m;
        c.n = n;
        c.d = d;
        c.tau_B = tau;
        cells.push_back(std::move(c));
      }
    }
  }

  {
    std::vector<std::function<void()>> build;
    for (auto& [m, slot] : A_by_m)
      build.emplace_back([&cfg, m = m, &slot = slot] {
        auto A = std::make_shared<Covariance>(make_covariance(cfg.A_model, m));
        A->sqrt();  // force spectral work once, shared by every cell
        slot = std::move(A);
      });
    for (auto& [n, slot] : Bstar_by_n)
      build.emplace_back([&cfg, n = n, &slot = slot] {
        auto B = std::make_shared<Covariance>(make_covariance(cfg.B_model, n));
        B->sqrt();
        slot = std::move(B);
      });
    parallel_for(static_cast<int>(build.size()), threads, [&](int i) { build[i](); });
  }

  for (auto& cell : cells) {
    cell.A = A_by_m.at(cell.m);
    const auto& Bstar = Bstar_by_n.at(cell.n);
    if (cell.tau_B > 0.0) {
      cell.B = std::make_shared<Covariance>(scale_to_trace(*Bstar, cell.n, cell.tau_B));
      cell.r_B = cell.B->trace() / cell.B->operator_norm();
    } else {
      cell.B = std::make_shared<Covariance>(Eigen::MatrixXd::Zero(cell.n, cell.n).eval());
      cell.r_B = 0.0;
    }
    const double a_max = cell.A->max_diagonal();
    const double normB = cell.tau_B > 0.0 ? cell.B->operator_norm() : 0.0;
    cell.D0 = std::sqrt(cell.tau_B) + std::sqrt(a_max);
    cell.D0_prime = std::sqrt(normB) + std::sqrt(a_max);
    const double lmin = cell.A->lambda_min();
    const double lmax = cell.A->lambda_max();
    cell.zeta1 = resolve_zeta("zeta1", lmin, lmax);
    cell.zeta2 = resolve_zeta("zeta2", lmin, lmax);
    cell.zeta3 = resolve_zeta("zeta3", lmin, lmax);
    if (!cfg.redraw_beta_per_trial)
      cell.beta_star = gen_beta(cell.m, cell.d, cfg.beta_length,
                                derive_stream(cfg.master_seed, "beta",
                                              static_cast<std::uint64_t>(cell.m),
                                              static_cast<std::uint64_t>(cell.d)));
  }

  // One task per (cell, trial); each task runs every solver variant on the
  // same generated instance and writes into its own slot.
  const int n_cells = static_cast<int>(cells.size());
  const int n_variants = static_cast<int>(variants.size());
  std::vector<TrialOutcome> slots(static_cast<std::size_t>(n_cells) * cfg.trials * n_variants);
  auto slot_at = [&](int cell, int trial, int variant) -> TrialOutcome& {
    return slots[(static_cast<std::size_t>(cell) * cfg.trials + trial) * n_variants + variant];
  };

  parallel_for(n_cells * cfg.trials, threads, [&](int task) {
    const int ci = task / cfg.trials;
    const int trial = task % cfg.trials;
    const DataCell& cell = cells[ci];

    Eigen::VectorXd beta_star = cell.beta_star;
    if (cfg.redraw_beta_per_trial)
      beta_star = gen_beta(cell.m, cell.d, cfg.beta_length,
                           derive_stream(cfg.master_seed, "beta",
                                         static_cast<std::uint64_t>(cell.m),
                                         static_cast<std::uint64_t>(cell.d),
                                         static_cast<std::uint64_t>(trial)));

    const std::uint64_t inst_seed = derive_stream(
        cfg.master_seed, "trial", static_cast<std::uint64_t>(cell.m),
        static_cast<std::uint64_t>(cell.n), bits(cell.tau_B), static_cast<std::uint64_t>(trial));
    const ProblemInstance inst =
        gen_instance(cell.A, cell.B, beta_star, cfg.sigma_eps, cfg.entry_dist, inst_seed);

    const double tau_hat = estimate_tau_B(inst.X, cell.A->trace());
    const SurrogatePair pair = build_surrogate(inst.X, inst.y, tau_hat);
    const double sqrt_log = std::sqrt(std::log(static_cast<double>(cell.m)) / cell.n);
    const double omega = 0.1 * cell.D0 * sqrt_log;
    const double beta_norm = beta_star.norm();
    const double beta_l1 = beta_star.lpNorm<1>();

    std::unique_ptr<ConicSolver> conic;  // factor once per instance
    for (int vi = 0; vi < n_variants; ++vi) {
      const SolverVariant& var = variants[vi];
      TrialOutcome& out = slot_at(ci, trial, vi);
      const auto t0 = std::chrono::steady_clock::now();
      Eigen::VectorXd beta_hat;
      if (var.kind == EstimatorKind::lasso_gd) {
        GdConfig gd;
        gd.lambda = var.f * cell.D0_prime * std::sqrt(tau_hat) * beta_norm * sqrt_log + omega;
        gd.R = var.R_mult * beta_norm * std::sqrt(static_cast<double>(cell.d));
        gd.zeta = var.zeta_preset == "zeta1"   ? cell.zeta1
                  : var.zeta_preset == "zeta3" ? cell.zeta3
                                               : cell.zeta2;
        gd.max_iters = cfg.gd_max_iters;
        gd.tol_rel_obj = cfg.gd_tol;
        const GdResult res = solve_lasso_gd(pair, gd);
        out.failed = res.trace.diverged || !res.trace.converged;
        beta_hat = res.beta_hat;
      } else {
        if (!conic) conic = std::make_unique<ConicSolver>(pair);
        ConicConfig cc;
        cc.lambda_conic = cfg.lambda_conic;
        cc.mu = var.f * cell.D0_prime * std::sqrt(tau_hat) * sqrt_log;
        cc.omega = omega;
        cc.max_iters = cfg.conic_max_iters;
        cc.tol_feas = cfg.conic_tol_feas;
        cc.tol_gap = cfg.conic_tol_gap;
        cc.admm_rho = cfg.admm_rho;
        const ConicSolution sol = conic->solve(cc);
        out.failed = !sol.converged;
        beta_hat = sol.beta_hat;
      }
      out.rel_l2 = (beta_hat - beta_star).norm() / beta_norm;
      out.rel_l1 = (beta_hat - beta_star).lpNorm<1>() / beta_l1;
      out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                   .count();
    }
  });

  // Deterministic aggregation: fixed cell/variant/trial order.
  std::vector<ResultRow> rows;
  rows.reserve(static_cast<std::size_t>(n_cells) * n_variants);
  for (int ci = 0; ci < n_cells; ++ci) {
    const DataCell& cell = cells[ci];
    for (int vi = 0; vi < n_variants; ++vi) {
      const SolverVariant& var = variants[vi];
      ResultRow row;
      row.estimator = var.kind == EstimatorKind::lasso_gd ? "lasso_gd" : "conic";
      row.m = cell.m;
      row.n = cell.n;
      row.d = cell.d;
      row.tau_B = cell.tau_B;
      row.rho_A = cfg.A_model.rho;
      row.rho_Bstar = cfg.B_model.rho;
      row.f = var.f;
      row.zeta_preset = var.kind == EstimatorKind::lasso_gd ? var.zeta_preset : "";
      row.R_mult = var.R_mult;
      row.trials = cfg.trials;
      row.rescaled_n = cell.n / (cell.d * std::log(static_cast<double>(cell.m)));
      row.r_B = cell.r_B;
      std::vector<double> l1s, l2s;
      for (int t = 0; t < cfg.trials; ++t) {
        const TrialOutcome& out = slot_at(ci, t, vi);
        row.runtime_ms += out.ms;
        if (out.failed) {
          ++row.failures;
          continue;
        }
        l1s.push_back(out.rel_l1);
        l2s.push_back(out.rel_l2);
      }
      const Stats s1 = mean_stderr(l1s), s2 = mean_stderr(l2s);
      row.rel_l1_error = s1.mean;
      row.rel_l1_stderr = s1.stderr_;
      row.rel_l2_error = s2.mean;
      row.rel_l2_stderr = s2.stderr_;
      rows.push_back(std::move(row));
    }
  }

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path base(cfg.output_dir);
    write_sweep_csv((base / "sweep.csv").string(), rows);
    std::ofstream timing((base / "timing.csv").string());
    timing << "estimator,m,n,d,tau_B,f,zeta,R_mult,runtime_ms\n";
    for (const auto& r : rows)
      timing << r.estimator << ',' << r.m << ',' << r.n << ',' << r.d << ','
             << format_double(r.tau_B) << ',' << format_double(r.f) << ',' << r.zeta_preset << ','
             << format_double(r.R_mult) << ',' << format_double(r.runtime_ms) << '\n';
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# schema=eiv-sweep-1\n";
  out << "estimator,m,n,d,tau_B,rho_A,rho_Bstar,f,zeta,R_mult,trials,failures,"
         "rel_l2_error,rel_l2_stderr,rel_l1_error,rel_l1_stderr,rescaled_n,r_B\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.m << ',' << r.n << ',' << r.d << ',' << format_double(r.tau_B)
        << ',' << format_double(r.rho_A) << ',' << format_double(r.rho_Bstar) << ','
        << format_double(r.f) << ',' << r.zeta_preset << ',' << format_double(r.R_mult) << ','
        << r.trials << ',' << r.failures << ',' << format_double(r.rel_l2_error) << ','
        << format_double(r.rel_l2_stderr) << ',' << format_double(r.rel_l1_error) << ','
        << format_double(r.rel_l1_stderr) << ',' << format_double(r.rescaled_n) << ','
        << format_double(r.r_B) << '\n';
  }
}

std::vector<TraceCurve> run_iterate_trace(const TraceConfig& cfg) {
  if (cfg.inits < 1) throw std::invalid_argument("run_iterate_trace: inits must be >= 1");
  if (cfg.rho_presets.empty()) throw std::invalid_argument("run_iterate_trace: empty rho grid");
  const int threads = resolve_threads(cfg.threads);
  const int m = cfg.m;
  const int d = cfg.d;
  const double logm = std::log(static_cast<double>(m));

  auto A = std::make_shared<const Covariance>(make_covariance(cfg.A_model, m));
  const Eigen::VectorXd beta_star =
      gen_beta(m, d, cfg.beta_length,
               derive_stream(cfg.master_seed, "beta", static_cast<std::uint64_t>(m),
                             static_cast<std::uint64_t>(d)));
  const double beta_norm = beta_star.norm();
  const double zeta = resolve_zeta(cfg.zeta_preset, A->lambda_min(), A->lambda_max());
  const double R = cfg.R_mult * beta_norm * std::sqrt(static_cast<double>(d));

  std::vector<TraceCurve> curves(cfg.rho_presets.size());
  parallel_for(static_cast<int>(cfg.rho_presets.size()), threads, [&](int ri) {
    const double rho = cfg.rho_presets[ri];
    const int n = static_cast<int>(std::ceil(rho * d * logm));
    auto Bstar = make_covariance(cfg.B_model, n);
    auto B = std::make_shared<const Covariance>(scale_to_trace(Bstar, n, cfg.tau_B));

    const std::uint64_t inst_seed = derive_stream(cfg.master_seed, "trace",
                                                  static_cast<std::uint64_t>(m), bits(rho));
    const ProblemInstance inst =
        gen_instance(A, B, beta_star, cfg.sigma_eps, EntryDist::gaussian, inst_seed);
    const double tau_hat = estimate_tau_B(inst.X, A->trace());
    const SurrogatePair pair = build_surrogate(inst.X, inst.y, tau_hat);

    const double a_max = A->max_diagonal();
    const double D0 = std::sqrt(cfg.tau_B) + std::sqrt(a_max);
    const double D0p = std::sqrt(B->operator_norm()) + std::sqrt(a_max);
    const double sqrt_log = std::sqrt(logm / n);
    const double omega = 0.1 * D0 * sqrt_log;

    GdConfig gd;
    gd.lambda = cfg.f * D0p * std::sqrt(tau_hat) * beta_norm * sqrt_log + omega;
    gd.R = R;
    gd.zeta = zeta;
    gd.max_iters = cfg.max_iters;
    gd.tol_rel_obj = cfg.gd_tol;
    gd.record_trace = true;

    TraceCurve& curve = curves[ri];
    curve.rho = rho;
    curve.n = n;
    curve.inits = cfg.inits;
    const std::size_t len = static_cast<std::size_t>(cfg.max_iters) + 1;
    curve.log_opt_err.assign(len, 0.0);
    curve.log_stat_err.assign(len, 0.0);

    for (int init = 0; init < cfg.inits; ++init) {
      Rng rng(derive_stream(cfg.master_seed, "init", bits(rho), static_cast<std::uint64_t>(init)));
      Eigen::VectorXd b0(m);
      for (int j = 0; j < m; ++j) b0(j) = rng.next_gaussian();
      b0 *= cfg.beta_length / b0.norm();
      gd.beta0 = project_l1_ball(b0, R);

      const GdResult res = solve_lasso_gd(pair, gd, &beta_star);
      std::vector<double> lopt(len), lstat(len);
      const std::size_t got = res.trace.opt_error.size();
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t idx = std::min(t, got - 1);
        lopt[t] = safe_log(res.trace.opt_error[idx]);
        lstat[t] = safe_log(res.trace.stat_error[idx]);
      }
      const LinearFit own = fit_line(lopt, pre_plateau_window(lopt));
      if (res.trace.diverged || !res.trace.converged || own.slope >= -1e-4)
        ++curve.flagged_noncontract;
      for (std::size_t t = 0; t < len; ++t) {
        curve.log_opt_err[t] += lopt[t] / cfg.inits;
        curve.log_stat_err[t] += lstat[t] / cfg.inits;
      }
    }

    const LinearFit fit = fit_line(curve.log_opt_err, pre_plateau_window(curve.log_opt_err));
    curve.slope = fit.slope;
    curve.r_squared = fit.r_squared;
    curve.final_stat = curve.log_stat_err.back();
    const std::size_t quarter = std::max<std::size_t>(1, len / 4);
    double acc = 0.0;
    for (std::size_t t = len - quarter; t < len; ++t) acc += curve.log_stat_err[t];
    curve.plateau_stat = acc / static_cast<double>(quarter);
  });

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    const std::filesystem::path base(cfg.output_dir);
    std::ofstream out((base / "trace.csv").string());
    out << "# schema=eiv-trace-1\n";
    out << "t,log_opt_err,log_stat_err,rho,seed\n";
    for (const auto& c : curves)
      for (std::size_t t = 0; t < c.log_opt_err.size(); ++t)
        out << t << ',' << format_double(c.log_opt_err[t]) << ','
            << format_double(c.log_stat_err[t]) << ',' << format_double(c.rho) << ','
            << cfg.master_seed << '\n';
    std::ofstream sum((base / "trace_summary.csv").string());
    sum << "# schema=eiv-trace-summary-1\n";
    sum << "rho,n,slope,r_squared,plateau_stat,final_stat,flagged_noncontract,inits\n";
    for (const auto& c : curves)
      sum << format_double(c.rho) << ',' << c.n << ',' << format_double(c.slope) << ','
          << format_double(c.r_squared) << ',' << format_double(c.plateau_stat) << ','
          << format_double(c.final_stat) << ',' << c.flagged_noncontract << ',' << c.inits << '\n';
  }
  return curves;
}

}  // namespace eiv
