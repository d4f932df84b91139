#ifndef SOFTPEN_EXPERIMENT_HPP
#define SOFTPEN_EXPERIMENT_HPP

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "softpen/libsvm.hpp"
#include "softpen/nested.hpp"
#include "softpen/oracle.hpp"
#include "softpen/qp_gen.hpp"
#include "softpen/trace.hpp"

namespace softpen {

enum class Algorithm {
  nested_sgd,
  nested_sgdm,
  nested_svrg,
  nested_svrg_screening,
  static_sgdm,
  accel_full,
};

inline Algorithm parse_algorithm(const std::string &s) {
  if (s == "nested-sgd") return Algorithm::nested_sgd;
  if (s == "nested-sgdm") return Algorithm::nested_sgdm;
  if (s == "nested-svrg") return Algorithm::nested_svrg;
  if (s == "nested-svrg-screening") return Algorithm::nested_svrg_screening;
  if (s == "static-sgdm") return Algorithm::static_sgdm;
  if (s == "accel-full") return Algorithm::accel_full;
  throw config_error("unknown algorithm '" + s + "'");
}

inline const char *algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::nested_sgd: return "nested-sgd";
    case Algorithm::nested_sgdm: return "nested-sgdm";
    case Algorithm::nested_svrg: return "nested-svrg";
    case Algorithm::nested_svrg_screening: return "nested-svrg-screening";
    case Algorithm::static_sgdm: return "static-sgdm";
    case Algorithm::accel_full: return "accel-full";
  }
  return "?";
}

struct ExperimentConfig {
  std::string kind = "qp";  // qp | svm
  QpSpec qp{};              // qp: per-run seed overrides qp.seed
  std::string data_path;    // svm: libsvm file
  std::vector<Algorithm> algorithms;
  std::vector<std::uint64_t> seeds{0};
  double xi = 1.0;
  double eta = 2.0;
  double delta0 = 0.05;
  double target_eps = 0.0;  // 0: budget-driven
  long budget = 10000000;
  double budget_mult = 1.0;
  double momentum = 0.9;
  double step_mult_sgd = 1.0;   // sgd/svrg base-step multiplier
  double step_mult_sgdm = 0.5;  // sgdm base-step multiplier (momentum-safe)
  bool final_boost = false;
  long checkpoint = 1000;
  double oracle_tol = 0.0;  // > 0: compute rel_error against solve_reference
  double static_delta = 0.0;  // static baseline delta; 0 -> delta0
  std::string trace_dir = ".";
  int jobs = 1;

  void validate() const {
    if (kind != "qp" && kind != "svm")
      throw config_error("kind must be qp or svm");
    if (algorithms.empty()) throw config_error("empty algorithm list");
    if (seeds.empty()) throw config_error("empty seed list");
    if (budget < 1 && target_eps <= 0.0)
      throw config_error("need budget >= 1 or target_eps > 0");
    if (jobs < 1) throw config_error("jobs >= 1");
  }
};

inline ExperimentConfig parse_config(const nlohmann::json &j) {
  ExperimentConfig c;
  try {
    c.kind = j.value("kind", c.kind);
    if (j.contains("qp")) {
      const auto &q = j.at("qp");
      c.qp.ell = q.value("ell", c.qp.ell);
      c.qp.m = q.value("m", c.qp.m);
      c.qp.n = q.value("n", c.qp.n);
      c.qp.w = q.value("w", c.qp.w);
    }
    c.data_path = j.value("data", c.data_path);
    if (j.contains("algorithms"))
      for (const auto &a : j.at("algorithms"))
        c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    if (j.contains("seeds"))
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.xi = j.value("xi", c.xi);
    c.eta = j.value("eta", c.eta);
    c.delta0 = j.value("delta0", c.delta0);
    c.target_eps = j.value("target_eps", c.target_eps);
    c.budget = j.value("budget", c.budget);
    c.budget_mult = j.value("budget_mult", c.budget_mult);
    c.momentum = j.value("momentum", c.momentum);
    c.step_mult_sgd = j.value("step_mult_sgd", c.step_mult_sgd);
    c.step_mult_sgdm = j.value("step_mult_sgdm", c.step_mult_sgdm);
    c.final_boost = j.value("final_boost", c.final_boost);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.oracle_tol = j.value("oracle_tol", c.oracle_tol);
    c.static_delta = j.value("static_delta", c.static_delta);
    c.trace_dir = j.value("trace_dir", c.trace_dir);
    c.jobs = j.value("jobs", c.jobs);
  } catch (const nlohmann::json::exception &e) {
    throw config_error(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig &c) {
  nlohmann::json j;
  j["kind"] = c.kind;
  j["qp"] = {{"ell", c.qp.ell}, {"m", c.qp.m}, {"n", c.qp.n}, {"w", c.qp.w}};
  j["data"] = c.data_path;
  std::vector<std::string> algs;
  for (Algorithm a : c.algorithms) algs.emplace_back(algorithm_name(a));
  j["algorithms"] = algs;
  j["seeds"] = c.seeds;
  j["xi"] = c.xi;
  j["eta"] = c.eta;
  j["delta0"] = c.delta0;
  j["target_eps"] = c.target_eps;
  j["budget"] = c.budget;
  j["budget_mult"] = c.budget_mult;
  j["momentum"] = c.momentum;
  j["step_mult_sgd"] = c.step_mult_sgd;
  j["step_mult_sgdm"] = c.step_mult_sgdm;
  j["final_boost"] = c.final_boost;
  j["checkpoint"] = c.checkpoint;
  j["oracle_tol"] = c.oracle_tol;
  j["static_delta"] = c.static_delta;
  j["trace_dir"] = c.trace_dir;
  j["jobs"] = c.jobs;
  j["svm_feature_normalization"] = "per-column min-max to [0,1]";
  return j;
}

struct RunSummary {
  std::string algorithm;
  std::uint64_t seed = 0;
  long total_steps = 0;
  double final_rel_error = std::numeric_limits<double>::quiet_NaN();
  double final_min_gap = std::numeric_limits<double>::quiet_NaN();
  int constraints_remaining = 0;
  int stages = 0;
  std::string trace_file;
};

struct ExperimentResult {
  std::vector<RunSummary> runs;
  std::string manifest_path;
};

namespace detail {

inline NestedConfig nested_config_for(const ExperimentConfig &c, Algorithm a,
                                      std::uint64_t seed) {
  NestedConfig nc;
  nc.xi = c.xi;
  nc.eta = c.eta;
  nc.delta0 = c.delta0;
  nc.target_eps = c.target_eps;
  nc.screening = a == Algorithm::nested_svrg_screening;
  nc.final_boost = c.final_boost;
  nc.budget_multiplier = c.budget_mult;
  nc.total_budget = c.budget;
  nc.checkpoint_period = c.checkpoint;
  nc.seed = seed;
  switch (a) {
    case Algorithm::nested_sgd:
      nc.solver.kind = SolverKind::sgd;
      nc.step_multiplier = c.step_mult_sgd;
      break;
    case Algorithm::nested_sgdm:
    case Algorithm::static_sgdm:
      nc.solver.kind = SolverKind::sgdm;
      nc.solver.momentum_alpha = c.momentum;
      nc.step_multiplier = c.step_mult_sgdm;
      break;
    case Algorithm::nested_svrg:
    case Algorithm::nested_svrg_screening:
      nc.solver.kind = SolverKind::svrg;
      nc.step_multiplier = c.step_mult_sgd;
      break;
    case Algorithm::accel_full:
      nc.solver.kind = SolverKind::accel_full;
      break;
  }
  return nc;
}

}  // namespace detail

// One (algorithm, seed) run over a prepared problem; emits a CSV trace and a
// summary. x_star may be null (no rel_error column then).
inline RunSummary run_one(const ConstrainedProblem &p,
                          const ExperimentConfig &c, Algorithm a,
                          std::uint64_t seed, const Vector *x_star,
                          const std::string &trace_path) {
  const ConjugateOracle conj(p);
  const double x_star_norm =
      x_star && x_star->norm() > 0 ? x_star->norm() : 1.0;

  std::vector<TraceRecord> records;
  double min_gap = std::numeric_limits<double>::infinity();
  auto on_checkpoint = [&](const Checkpoint &cp, const Vector &x) {
    TraceRecord r;
    r.steps = cp.steps;
    r.stage = cp.stage_t;
    r.delta = cp.delta_t;
    r.m_hat = cp.m_hat;
    const PenaltyParams params(c.xi, cp.delta_t);
    r.objective = penalty_objective(p, params, x, *cp.S_hat);
    const DualCertificate cert =
        duality_gap(p, x, params, *cp.S_hat, conj);
    r.gap = cert.gap;
    min_gap = std::min(min_gap, cert.gap);
    r.min_gap = min_gap;
    if (x_star) r.rel_error = (x - *x_star).norm() / x_star_norm;
    records.push_back(std::move(r));
  };

  NestedConfig nc = detail::nested_config_for(c, a, seed);
  NestedResult res;
  if (a == Algorithm::static_sgdm) {
    const double d = c.static_delta > 0.0 ? c.static_delta : c.delta0;
    res = run_static(p, nc, d, on_checkpoint);
  } else {
    res = run_nested(p, nc, on_checkpoint);
  }

  write_trace_csv(trace_path, records);

  RunSummary s;
  s.algorithm = algorithm_name(a);
  s.seed = seed;
  s.total_steps = res.total_incremental_steps;
  s.final_min_gap = std::isfinite(min_gap)
                        ? min_gap
                        : std::numeric_limits<double>::quiet_NaN();
  s.constraints_remaining =
      res.stages.empty() ? p.num_constraints() : res.stages.back().m_hat;
  s.stages = static_cast<int>(res.stages.size());
  s.trace_file = trace_path;
  if (x_star)
    s.final_rel_error = (res.x_final - *x_star).norm() / x_star_norm;
  return s;
}

// Full experiment: (algorithm, seed) grid, up to `jobs` runs in flight,
// one CSV per run plus a JSON manifest.
inline ExperimentResult run_experiment(const ExperimentConfig &cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.trace_dir);

  // SVM: one shared problem + reference across all runs
  ConstrainedProblem shared;
  Vector shared_x_star;
  bool have_shared = false, have_shared_star = false;
  if (cfg.kind == "svm") {
    std::ifstream in(cfg.data_path);
    if (!in) throw data_file_missing("cannot open " + cfg.data_path);
    const SvmDataset data = parse_libsvm(in);
    shared = build_svm_problem(data);
    spectral(shared);  // warm the cache before threads share it
    have_shared = true;
    if (cfg.oracle_tol > 0.0) {
      shared_x_star = solve_reference(shared, cfg.oracle_tol).x_star;
      have_shared_star = true;
    }
  }

  struct Task {
    Algorithm alg;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Algorithm a : cfg.algorithms)
    for (std::uint64_t s : cfg.seeds) tasks.push_back({a, s});

  ExperimentResult result;
  result.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(tasks.size());

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task &t = tasks[i];
      try {
        ConstrainedProblem local;
        const ConstrainedProblem *p = &shared;
        Vector local_star;
        const Vector *x_star =
            have_shared_star ? &shared_x_star : nullptr;
        if (!have_shared) {
          QpSpec spec = cfg.qp;
          spec.seed = t.seed;
          local = generate_qp(spec);
          spectral(local);
          p = &local;
          if (cfg.oracle_tol > 0.0) {
            local_star = solve_reference(*p, cfg.oracle_tol).x_star;
            x_star = &local_star;
          }
        }
        const std::string path =
            (fs::path(cfg.trace_dir) /
             (cfg.kind + "_" + algorithm_name(t.alg) + "_seed" +
              std::to_string(t.seed) + ".csv"))
                .string();
        result.runs[i] = run_one(*p, cfg, t.alg, t.seed, x_star, path);
      } catch (const std::exception &e) {
        errors[i] = e.what();
      }
    }
  };

  const int jobs =
      std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!errors[i].empty())
      throw convergence_failure("run " + std::string(algorithm_name(
                                    tasks[i].alg)) +
                                " seed " + std::to_string(tasks[i].seed) +
                                " failed: " + errors[i]);

  nlohmann::json manifest;
  manifest["config"] = config_to_json(cfg);
  nlohmann::json runs = nlohmann::json::array();
  for (const RunSummary &s : result.runs) {
    nlohmann::json r;
    r["algorithm"] = s.algorithm;
    r["seed"] = s.seed;
    r["total_steps"] = s.total_steps;
    if (std::isfinite(s.final_rel_error))
      r["final_rel_error"] = s.final_rel_error;
    if (std::isfinite(s.final_min_gap))
      r["final_min_gap"] = s.final_min_gap;
    r["constraints_remaining"] = s.constraints_remaining;
    r["stages"] = s.stages;
    r["trace_file"] = s.trace_file;
    runs.push_back(std::move(r));
  }
  manifest["runs"] = std::move(runs);
  result.manifest_path =
      (fs::path(cfg.trace_dir) / "manifest.json").string();
  std::ofstream out(result.manifest_path, std::ios::binary);
  out << manifest.dump(2) << '\n';
  return result;
}

}  // namespace softpen

#endif
