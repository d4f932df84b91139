// Command-line front end: experiment runners (qp, svm, solve), the reference
// oracle, and closed-form bound evaluation. Exit codes: 0 success, 1 config
// error, 2 data error, 3 numeric failure.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "softpen/softpen.hpp"

namespace {

using namespace softpen;

void add_experiment_flags(CLI::App *cmd, ExperimentConfig &cfg,
                          std::vector<std::string> &algorithms) {
  cmd->add_option("--xi", cfg.xi, "penalty weight")->envname("SOFTPEN_XI");
  cmd->add_option("--eta", cfg.eta, "delta shrink factor (> 1)")
      ->envname("SOFTPEN_ETA");
  cmd->add_option("--delta0", cfg.delta0, "initial smoothing delta")
      ->envname("SOFTPEN_DELTA0");
  cmd->add_option("--eps", cfg.target_eps, "target accuracy (0: budget only)")
      ->envname("SOFTPEN_EPS");
  cmd->add_option("--budget", cfg.budget, "total incremental-step budget")
      ->envname("SOFTPEN_BUDGET");
  cmd->add_option("--budget-mult", cfg.budget_mult,
                  "stage budget multiplier")
      ->envname("SOFTPEN_BUDGET_MULT");
  cmd->add_option("--momentum", cfg.momentum, "sgdm momentum in [0,1)")
      ->envname("SOFTPEN_MOMENTUM");
  cmd->add_option("--step-mult-sgd", cfg.step_mult_sgd,
                  "sgd/svrg step multiplier");
  cmd->add_option("--step-mult-sgdm", cfg.step_mult_sgdm,
                  "sgdm step multiplier");
  cmd->add_option("--seeds", cfg.seeds, "seed list")->envname("SOFTPEN_SEEDS");
  cmd->add_option("--solver,--algorithms", algorithms,
                  "algorithms: nested-sgd nested-sgdm nested-svrg "
                  "nested-svrg-screening static-sgdm accel-full")
      ->envname("SOFTPEN_SOLVER");
  cmd->add_flag("--screening", "shorthand: append nested-svrg-screening");
  cmd->add_flag("--final-boost", cfg.final_boost, "last-stage accuracy boost")
      ->envname("SOFTPEN_FINAL_BOOST");
  cmd->add_option("--checkpoint", cfg.checkpoint,
                  "trace cadence in incremental steps");
  cmd->add_option("--oracle-tol", cfg.oracle_tol,
                  "reference tolerance for rel_error (0: skip)")
      ->envname("SOFTPEN_ORACLE_TOL");
  cmd->add_option("--static-delta", cfg.static_delta,
                  "static baseline delta (0: delta0)");
  cmd->add_option("--trace-out", cfg.trace_dir, "trace output directory")
      ->envname("SOFTPEN_TRACE_OUT");
  cmd->add_option("--jobs", cfg.jobs, "concurrent runs")
      ->envname("SOFTPEN_JOBS");
}

void finalize_algorithms(const CLI::App *cmd, ExperimentConfig &cfg,
                         const std::vector<std::string> &algorithms) {
  for (const std::string &a : algorithms)
    cfg.algorithms.push_back(parse_algorithm(a));
  if (cmd->count("--screening") &&
      std::find(cfg.algorithms.begin(), cfg.algorithms.end(),
                Algorithm::nested_svrg_screening) == cfg.algorithms.end())
    cfg.algorithms.push_back(Algorithm::nested_svrg_screening);
  if (cfg.algorithms.empty())
    throw config_error("no algorithms selected (use --solver)");
}

void print_summary(const ExperimentResult &result) {
  for (const RunSummary &s : result.runs) {
    std::printf("%-22s seed %-4llu steps %-10ld", s.algorithm.c_str(),
                static_cast<unsigned long long>(s.seed), s.total_steps);
    if (std::isfinite(s.final_rel_error))
      std::printf(" rel_error %.3e", s.final_rel_error);
    if (std::isfinite(s.final_min_gap))
      std::printf(" min_gap %.3e", s.final_min_gap);
    std::printf(" m_hat %d\n", s.constraints_remaining);
  }
  std::printf("manifest: %s\n", result.manifest_path.c_str());
}

int dispatch(int argc, char **argv) {
  CLI::App app{"softplus-penalty solvers for linearly constrained "
               "strongly convex finite sums"};
  app.require_subcommand(1);

  ExperimentConfig qp_cfg, svm_cfg;
  std::vector<std::string> qp_algs, svm_algs;

  CLI::App *qp = app.add_subcommand("qp", "random ridge-regression QP runs");
  qp->add_option("--ell", qp_cfg.qp.ell, "objective components");
  qp->add_option("--m", qp_cfg.qp.m, "constraints");
  qp->add_option("--n", qp_cfg.qp.n, "dimension");
  qp->add_option("--w", qp_cfg.qp.w, "ridge weight");
  add_experiment_flags(qp, qp_cfg, qp_algs);

  CLI::App *svm = app.add_subcommand("svm", "hard-margin SVM on libsvm data");
  svm->add_option("--data", svm_cfg.data_path, "libsvm-format file")
      ->required()
      ->envname("SOFTPEN_DATA");
  svm_cfg.delta0 = 0.005;
  add_experiment_flags(svm, svm_cfg, svm_algs);

  std::string config_path;
  CLI::App *solve = app.add_subcommand("solve", "run a JSON config file");
  solve->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->envname("SOFTPEN_CONFIG");

  QpSpec oracle_spec;
  std::string oracle_data, oracle_out;
  double oracle_tol = 1e-9;
  CLI::App *oracle = app.add_subcommand("oracle", "reference KKT solve");
  oracle->add_option("--ell", oracle_spec.ell, "objective components");
  oracle->add_option("--m", oracle_spec.m, "constraints");
  oracle->add_option("--n", oracle_spec.n, "dimension");
  oracle->add_option("--w", oracle_spec.w, "ridge weight");
  oracle->add_option("--seed", oracle_spec.seed, "instance seed");
  oracle->add_option("--data", oracle_data, "libsvm file instead of QP");
  oracle->add_option("--tol", oracle_tol, "KKT tolerance");
  oracle->add_option("--out", oracle_out, "write solution JSON here");

  double b_xi = 1.0, b_delta = 0.01, b_mu = 1.0, b_smax = 1.0, b_spmin = 1.0;
  int b_m = 1;
  CLI::App *bounds = app.add_subcommand("bounds", "closed-form bound values");
  bounds->add_option("--xi", b_xi, "penalty weight")->envname("SOFTPEN_XI");
  bounds->add_option("--delta", b_delta, "smoothing delta");
  bounds->add_option("--mu", b_mu, "strong convexity");
  bounds->add_option("--m", b_m, "constraint count");
  bounds->add_option("--s-max", b_smax, "largest singular value");
  bounds->add_option("--s-pmin", b_spmin, "smallest positive singular value");

  CLI11_PARSE(app, argc, argv);

  if (qp->parsed()) {
    qp_cfg.kind = "qp";
    finalize_algorithms(qp, qp_cfg, qp_algs);
    print_summary(run_experiment(qp_cfg));
    return 0;
  }
  if (svm->parsed()) {
    svm_cfg.kind = "svm";
    finalize_algorithms(svm, svm_cfg, svm_algs);
    print_summary(run_experiment(svm_cfg));
    return 0;
  }
  if (solve->parsed()) {
    std::ifstream in(config_path);
    if (!in) throw data_file_missing("cannot open config " + config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception &e) {
      throw config_error(std::string("bad config JSON: ") + e.what());
    }
    print_summary(run_experiment(parse_config(j)));
    return 0;
  }
  if (oracle->parsed()) {
    ConstrainedProblem p;
    if (!oracle_data.empty()) {
      std::ifstream in(oracle_data);
      if (!in) throw data_file_missing("cannot open " + oracle_data);
      p = build_svm_problem(parse_libsvm(in));
    } else {
      p = generate_qp(oracle_spec);
    }
    const ReferenceSolution sol = solve_reference(p, oracle_tol);
    nlohmann::json j;
    j["kkt"] = {{"stationarity", sol.kkt.stationarity},
                {"primal_infeas", sol.kkt.primal_infeas},
                {"dual_infeas", sol.kkt.dual_infeas},
                {"complementarity", sol.kkt.complementarity}};
    j["active_set"] = sol.active_set;
    j["varsigma"] = sol.varsigma;
    j["lambda_inf_norm"] = sol.lambda_inf_norm;
    j["iterations"] = sol.iterations;
    j["x_star"] = std::vector<double>(sol.x_star.begin(), sol.x_star.end());
    j["lambda_star"] =
        std::vector<double>(sol.lambda_star.begin(), sol.lambda_star.end());
    if (!oracle_out.empty()) {
      std::ofstream out(oracle_out, std::ios::binary);
      out << j.dump(2) << '\n';
    } else {
      std::cout << j.dump(2) << '\n';
    }
    return 0;
  }
  // bounds
  const SpectralInfo info{b_smax, b_spmin};
  const PenaltyParams params(b_xi, b_delta);
  nlohmann::json j;
  const DistanceBound db = distance_bound(params, b_mu, b_m, info);
  j["distance_bound"] = db.bound;
  j["distance_claim"] = db.active_claim;
  try {
    j["residual_bound"] = residual_bound(params, b_mu, b_m, info);
  } catch (const out_of_validity_range &) {
    j["residual_bound"] = nullptr;
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  try {
    return dispatch(argc, argv);
  } catch (const config_error &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const invalid_params &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const invalid_target &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const parse_error &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const data_file_missing &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const zero_row_error &e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}
