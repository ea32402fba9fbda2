#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "eiv/constants.hpp"
#include "eiv/csv.hpp"
#include "eiv/diagnostics.hpp"
#include "eiv/harness.hpp"
#include "eiv/rng.hpp"
#include "eiv/simulate.hpp"
#include "eiv/solver_conic.hpp"
#include "eiv/solver_gd.hpp"
#include "eiv/surrogate.hpp"

namespace eiv {

namespace {

struct GenFlags {
  int m = 64, n = 400, d = 8;
  double tau_B = 0.3;
  double rho_A = 0.3, rho_Bstar = 0.3;
  std::string a_family = "ar1", b_family = "ar1";
  int hub_block = 17;
  double beta_length = 5.0, sigma_eps = 1.0;
  std::string entry_dist = "gaussian";
  std::uint64_t seed = 0;
};

void add_gen_flags(CLI::App* cmd, GenFlags& g) {
  cmd->add_option("--m", g.m, "number of covariates");
  cmd->add_option("--n", g.n, "number of samples");
  cmd->add_option("--d", g.d, "support size of beta*");
  cmd->add_option("--tau-b", g.tau_B, "trace parameter tr(B)/n");
  cmd->add_option("--rho-a", g.rho_A, "A model correlation");
  cmd->add_option("--rho-bstar", g.rho_Bstar, "B correlation model parameter");
  cmd->add_option("--a-family", g.a_family)->check(CLI::IsMember({"ar1", "star_block", "identity"}));
  cmd->add_option("--b-family", g.b_family)
      ->check(CLI::IsMember({"ar1", "random_precision", "identity"}));
  cmd->add_option("--hub-block", g.hub_block, "star block size (hub + leaves)");
  cmd->add_option("--beta-length", g.beta_length, "||beta*||_2");
  cmd->add_option("--sigma-eps", g.sigma_eps, "response noise level");
  cmd->add_option("--entry-dist", g.entry_dist)->check(CLI::IsMember({"gaussian", "rademacher"}));
  cmd->add_option("--seed", g.seed, "instance seed");
}

CovFamily parse_family(const std::string& s) {
  if (s == "ar1") return CovFamily::ar1;
  if (s == "star_block") return CovFamily::star_block;
  if (s == "random_precision") return CovFamily::random_precision;
  if (s == "identity") return CovFamily::identity;
  throw CLI::ValidationError("family", "unknown covariance family: " + s);
}

struct GenData {
  ProblemInstance inst;
  double D0 = 0.0, D0_prime = 0.0;
  double lambda_min_A = 0.0, lambda_max_A = 0.0;
};

GenData generate(const GenFlags& g) {
  CovModelSpec a_model;
  a_model.family = parse_family(g.a_family);
  a_model.rho = g.rho_A;
  a_model.hub_block = g.hub_block;
  CovModelSpec b_model;
  b_model.family = parse_family(g.b_family);
  b_model.rho = g.rho_Bstar;

  auto A = std::make_shared<const Covariance>(make_covariance(a_model, g.m));
  std::shared_ptr<const Covariance> B;
  if (g.tau_B > 0.0) {
    Covariance Bstar = make_covariance(b_model, g.n);
    B = std::make_shared<const Covariance>(scale_to_trace(Bstar, g.n, g.tau_B));
  } else {
    B = std::make_shared<const Covariance>(Eigen::MatrixXd::Zero(g.n, g.n).eval());
  }
  const Eigen::VectorXd beta =
      gen_beta(g.m, g.d, g.beta_length,
               derive_stream(g.seed, "beta", static_cast<std::uint64_t>(g.m),
                             static_cast<std::uint64_t>(g.d)));
  const EntryDist dist =
      g.entry_dist == "rademacher" ? EntryDist::rademacher : EntryDist::gaussian;
  GenData data{gen_instance(A, B, beta, g.sigma_eps, dist,
                            derive_stream(g.seed, "instance"))};
  const double a_max = A->max_diagonal();
  data.D0 = std::sqrt(g.tau_B) + std::sqrt(a_max);
  data.D0_prime = std::sqrt(g.tau_B > 0.0 ? B->operator_norm() : 0.0) + std::sqrt(a_max);
  data.lambda_min_A = A->lambda_min();
  data.lambda_max_A = A->lambda_max();
  return data;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"sparse regression under additive column-dependent measurement error"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate an instance directory");
  auto sim_flags = std::make_shared<GenFlags>();
  auto sim_out = std::make_shared<std::string>();
  add_gen_flags(sim, *sim_flags);
  sim->add_option("--out", *sim_out, "output directory")->required();
  sim->callback([sim_flags, sim_out] {
    const GenData data = generate(*sim_flags);
    save_instance(data.inst, *sim_out);
    std::cout << "wrote " << *sim_out << "\n";
  });

  // ---- lasso ----
  auto* lasso = app.add_subcommand("lasso", "solve the corrected Lasso by composite gradient descent");
  auto la_flags = std::make_shared<GenFlags>();
  struct LassoOpts {
    std::string instance_dir;
    double f = 0.2, lambda = -1.0, r_mult = 1.0, tol = 1e-9;
    std::string zeta_preset = "zeta2";
    int max_iters = 2000;
    bool strict = false;
  };
  auto lo = std::make_shared<LassoOpts>();
  add_gen_flags(lasso, *la_flags);
  lasso->add_option("--instance", lo->instance_dir, "stored instance directory");
  lasso->add_option("--f", lo->f, "penalty factor");
  lasso->add_option("--lambda", lo->lambda, "explicit penalty (overrides --f)");
  lasso->add_option("--r-mult", lo->r_mult, "l1 radius multiplier of ||beta*||sqrt(d)");
  lasso->add_option("--zeta-preset", lo->zeta_preset)->check(CLI::IsMember({"zeta1", "zeta2", "zeta3"}));
  lasso->add_option("--max-iters", lo->max_iters);
  lasso->add_option("--tol", lo->tol, "relative objective tolerance");
  lasso->add_flag("--strict", lo->strict, "exit 3 on non-convergence");
  lasso->callback([la_flags, lo, &exit_code] {
    Eigen::MatrixXd X;
    Eigen::VectorXd y, beta_star;
    double lambda = lo->lambda, zeta = 0.0;
    int d = 0;
    if (!lo->instance_dir.empty()) {
      if (lambda < 0.0)
        throw CLI::ValidationError("--lambda", "required with --instance (no model to derive it)");
      StoredInstance s = load_instance(lo->instance_dir);
      X = std::move(s.X);
      y = std::move(s.y);
      beta_star = std::move(s.beta_star);
      d = s.d > 0 ? s.d : static_cast<int>((beta_star.array() != 0.0).count());
    } else {
      const GenData data = generate(*la_flags);
      X = data.inst.X;
      y = data.inst.y;
      beta_star = data.inst.beta_star;
      d = data.inst.d;
      zeta = resolve_zeta(lo->zeta_preset, data.lambda_min_A, data.lambda_max_A);
      if (lambda < 0.0) {
        const double sqrt_log = std::sqrt(std::log(static_cast<double>(X.cols())) / X.rows());
        const double tau_hat = estimate_tau_B(X, static_cast<double>(X.cols()));
        lambda = lo->f * data.D0_prime * std::sqrt(tau_hat) * beta_star.norm() * sqrt_log +
                 0.1 * data.D0 * sqrt_log;
      }
    }
    const double tau_hat = estimate_tau_B(X, static_cast<double>(X.cols()));
    const SurrogatePair pair = build_surrogate(X, y, tau_hat);
    if (zeta == 0.0) {
      // No covariance model at hand: step from the realized spectrum.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pair.Gamma_hat, Eigen::EigenvaluesOnly);
      zeta = 1.5 * std::max(es.eigenvalues().maxCoeff(), 1e-12);
    }
    GdConfig gd;
    gd.lambda = lambda;
    gd.R = lo->r_mult * beta_star.norm() * std::sqrt(static_cast<double>(std::max(d, 1)));
    gd.zeta = zeta;
    gd.max_iters = lo->max_iters;
    gd.tol_rel_obj = lo->tol;
    const GdResult res = solve_lasso_gd(pair, gd);
    std::cout << "lambda = " << format_double(lambda) << "\n"
              << "tau_hat_B = " << format_double(tau_hat) << "\n"
              << "iterations = " << res.trace.iterations_run << "\n"
              << "converged = " << (res.trace.converged ? 1 : 0) << "\n"
              << "rel_l2_error = "
              << format_double((res.beta_hat - beta_star).norm() / beta_star.norm()) << "\n"
              << "rel_l1_error = "
              << format_double((res.beta_hat - beta_star).lpNorm<1>() / beta_star.lpNorm<1>())
              << "\n";
    if (lo->strict && (!res.trace.converged || res.trace.diverged)) exit_code = 3;
  });

  // ---- conic ----
  auto* conic = app.add_subcommand("conic", "solve the compensated MU selector");
  auto co_flags = std::make_shared<GenFlags>();
  struct ConicOpts {
    std::string instance_dir;
    double f = 0.2, mu = -1.0, omega = -1.0, lambda_conic = 1.0;
    int max_iters = 4000;
    double tol = 1e-6, admm_rho = 1.0;
    bool strict = false;
  };
  auto co = std::make_shared<ConicOpts>();
  add_gen_flags(conic, *co_flags);
  conic->add_option("--instance", co->instance_dir, "stored instance directory");
  conic->add_option("--f", co->f, "penalty factor");
  conic->add_option("--mu", co->mu, "explicit mu (overrides --f)");
  conic->add_option("--omega", co->omega, "explicit omega");
  conic->add_option("--lambda-conic", co->lambda_conic);
  conic->add_option("--max-iters", co->max_iters);
  conic->add_option("--tol", co->tol);
  conic->add_option("--admm-rho", co->admm_rho);
  conic->add_flag("--strict", co->strict, "exit 3 on non-convergence");
  conic->callback([co_flags, co, &exit_code] {
    Eigen::MatrixXd X;
    Eigen::VectorXd y, beta_star;
    double mu = co->mu, omega = co->omega;
    if (!co->instance_dir.empty()) {
      if (mu < 0.0 || omega < 0.0)
        throw CLI::ValidationError("--mu", "--mu and --omega required with --instance");
      StoredInstance s = load_instance(co->instance_dir);
      X = std::move(s.X);
      y = std::move(s.y);
      beta_star = std::move(s.beta_star);
    } else {
      const GenData data = generate(*co_flags);
      X = data.inst.X;
      y = data.inst.y;
      beta_star = data.inst.beta_star;
      const double sqrt_log = std::sqrt(std::log(static_cast<double>(X.cols())) / X.rows());
      const double tau_hat = estimate_tau_B(X, static_cast<double>(X.cols()));
      if (mu < 0.0) mu = co->f * data.D0_prime * std::sqrt(tau_hat) * sqrt_log;
      if (omega < 0.0) omega = 0.1 * data.D0 * sqrt_log;
    }
    const double tau_hat = estimate_tau_B(X, static_cast<double>(X.cols()));
    const SurrogatePair pair = build_surrogate(X, y, tau_hat);
    ConicConfig cc;
    cc.lambda_conic = co->lambda_conic;
    cc.mu = mu;
    cc.omega = omega;
    cc.max_iters = co->max_iters;
    cc.tol_feas = co->tol;
    cc.tol_gap = co->tol;
    cc.admm_rho = co->admm_rho;
    const ConicSolution sol = solve_conic(pair, cc);
    std::cout << "mu = " << format_double(mu) << "\n"
              << "omega = " << format_double(omega) << "\n"
              << "iterations = " << sol.iterations << "\n"
              << "converged = " << (sol.converged ? 1 : 0) << "\n"
              << "infeasible = " << (sol.infeasible ? 1 : 0) << "\n"
              << "t_hat = " << format_double(sol.t_hat) << "\n"
              << "objective = " << format_double(sol.objective) << "\n"
              << "feas_residual = " << format_double(sol.feas_residual) << "\n"
              << "rel_l2_error = "
              << format_double((sol.beta_hat - beta_star).norm() / beta_star.norm()) << "\n"
              << "rel_l1_error = "
              << format_double((sol.beta_hat - beta_star).lpNorm<1>() / beta_star.lpNorm<1>())
              << "\n";
    if (co->strict && !sol.converged) exit_code = 3;
  });

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo grid sweep, writes sweep.csv");
  sweep->set_config("--config");
  auto sc = std::make_shared<ExperimentConfig>();
  auto sweep_strings = std::make_shared<std::pair<std::string, std::string>>("ar1", "ar1");
  auto estimator_name = std::make_shared<std::string>("lasso_gd");
  sweep->add_option("--m-list", sc->m_values, "m grid");
  sweep->add_option("--n-list", sc->n_values, "n grid");
  sweep->add_option("--rescaled-list", sc->rescaled_n_values, "rescaled n/(d log m) grid");
  sweep->add_option("--tau-b-list", sc->tau_B_values, "tau_B grid");
  sweep->add_option("--d", sc->d_value, "support size (0: floor(sqrt(m)))");
  sweep->add_option("--beta-length", sc->beta_length);
  sweep->add_option("--sigma-eps", sc->sigma_eps);
  sweep->add_option("--estimator", *estimator_name)->check(CLI::IsMember({"lasso_gd", "conic", "both"}));
  sweep->add_option("--f-list", sc->f_grid, "penalty factors (default 0.05..0.8)");
  sweep->add_option("--zeta-presets", sc->zeta_presets);
  sweep->add_option("--r-mults", sc->R_multipliers);
  sweep->add_option("--trials", sc->trials);
  sweep->add_option("--master-seed", sc->master_seed);
  sweep->add_option("--out", sc->output_dir, "output directory")->required();
  sweep->add_flag("--redraw-beta", sc->redraw_beta_per_trial, "fresh beta* each trial");
  sweep->add_option("--threads", sc->threads);
  sweep->add_option("--rho-a", sc->A_model.rho);
  sweep->add_option("--rho-bstar", sc->B_model.rho);
  sweep->add_option("--a-family", sweep_strings->first)
      ->check(CLI::IsMember({"ar1", "star_block", "identity"}));
  sweep->add_option("--b-family", sweep_strings->second)
      ->check(CLI::IsMember({"ar1", "random_precision", "identity"}));
  sweep->add_option("--hub-block", sc->A_model.hub_block);
  sweep->add_option("--gd-max-iters", sc->gd_max_iters);
  sweep->add_option("--gd-tol", sc->gd_tol);
  sweep->add_option("--conic-max-iters", sc->conic_max_iters);
  sweep->add_option("--conic-tol", sc->conic_tol_gap);
  sweep->add_option("--admm-rho", sc->admm_rho);
  sweep->add_option("--lambda-conic", sc->lambda_conic);
  sweep->callback([sc, sweep_strings, estimator_name] {
    sc->A_model.family = parse_family(sweep_strings->first);
    sc->B_model.family = parse_family(sweep_strings->second);
    sc->estimator = *estimator_name == "conic"  ? EstimatorKind::conic
                    : *estimator_name == "both" ? EstimatorKind::both
                                                : EstimatorKind::lasso_gd;
    sc->conic_tol_feas = sc->conic_tol_gap;
    const auto rows = run_sweep(*sc);
    std::cout << "cells = " << rows.size() << ", wrote " << sc->output_dir << "/sweep.csv\n";
  });

  // ---- trace ----
  auto* trace = app.add_subcommand("trace", "iterate error traces, writes trace.csv");
  auto tc = std::make_shared<TraceConfig>();
  trace->add_option("--m", tc->m);
  trace->add_option("--d", tc->d);
  trace->add_option("--tau-b", tc->tau_B);
  trace->add_option("--rho-list", tc->rho_presets, "n = ceil(rho d log m) presets");
  trace->add_option("--inits", tc->inits);
  trace->add_option("--beta-length", tc->beta_length);
  trace->add_option("--sigma-eps", tc->sigma_eps);
  trace->add_option("--f", tc->f);
  trace->add_option("--zeta-preset", tc->zeta_preset)->check(CLI::IsMember({"zeta1", "zeta2", "zeta3"}));
  trace->add_option("--r-mult", tc->R_mult);
  trace->add_option("--max-iters", tc->max_iters);
  trace->add_option("--master-seed", tc->master_seed);
  trace->add_option("--out", tc->output_dir)->required();
  trace->add_option("--threads", tc->threads);
  trace->add_option("--rho-a", tc->A_model.rho);
  trace->add_option("--rho-bstar", tc->B_model.rho);
  trace->callback([tc] {
    const auto curves = run_iterate_trace(*tc);
    std::cout << "presets = " << curves.size() << ", wrote " << tc->output_dir << "/trace.csv\n";
  });

  // ---- diagnose ----
  auto* diag = app.add_subcommand("diagnose", "restricted-eigenvalue probes on a stored surrogate");
  struct DiagOpts {
    std::string gamma_path, out_path;
    double alpha = 0.0, tau = 0.0, smoothness = 0.0;
    int trials = 10000;
    std::uint64_t seed = 0;
  };
  auto dg = std::make_shared<DiagOpts>();
  diag->add_option("--gamma", dg->gamma_path, "CSV of the symmetric matrix")->required();
  diag->add_option("--alpha", dg->alpha, "lower-RE curvature")->required();
  diag->add_option("--tau", dg->tau, "tolerance")->required();
  diag->add_option("--smoothness", dg->smoothness, "also probe upper-RE at this smoothness");
  diag->add_option("--trials", dg->trials);
  diag->add_option("--seed", dg->seed);
  diag->add_option("--out", dg->out_path, "write a JSON report");
  diag->callback([dg] {
    const Eigen::MatrixXd G = load_matrix_csv(dg->gamma_path);
    const ReProbeResult lower = falsify_lower_re(G, dg->alpha, dg->tau, dg->trials, dg->seed);
    std::cout << "lower_re_worst_margin = " << format_double(lower.worst_margin) << "\n"
              << "lower_re_violated = " << (lower.worst_margin < 0 ? 1 : 0) << "\n";
    nlohmann::json report;
    report["lower_re"] = {{"alpha", dg->alpha},
                          {"tau", dg->tau},
                          {"worst_margin", lower.worst_margin},
                          {"exact", lower.exact},
                          {"samples_used", lower.samples_used}};
    if (dg->smoothness > 0.0) {
      const ReProbeResult upper =
          falsify_upper_re(G, dg->smoothness, dg->tau, dg->trials, dg->seed);
      std::cout << "upper_re_worst_margin = " << format_double(upper.worst_margin) << "\n"
                << "upper_re_violated = " << (upper.worst_margin < 0 ? 1 : 0) << "\n";
      report["upper_re"] = {{"smoothness", dg->smoothness},
                            {"tau", dg->tau},
                            {"worst_margin", upper.worst_margin},
                            {"exact", upper.exact},
                            {"samples_used", upper.samples_used}};
    }
    if (!dg->out_path.empty()) {
      std::ofstream out(dg->out_path);
      out << report.dump(2) << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace eiv
