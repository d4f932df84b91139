// Acceptance suite: one test case per criterion, each emitting a single
// "criterion N: PASS/FAIL" line with its pinned tolerances.
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "softpen/softpen.hpp"

using namespace softpen;

namespace {

void report(int n, bool pass, const std::string &detail) {
  std::cout << "criterion " << n << ": " << (pass ? "PASS" : "FAIL") << " — "
            << detail << std::endl;
  CHECK(pass);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

struct TraceRow {
  long steps;
  double objective, rel_error, gap, min_gap;
};

std::vector<TraceRow> read_trace(const std::string &path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string f[8];
    for (int i = 0; i < 8; ++i) std::getline(ls, f[i], ',');
    TraceRow r;
    r.steps = std::stol(f[0]);
    r.objective = f[3].empty() ? std::nan("") : std::stod(f[3]);
    r.rel_error = f[4].empty() ? std::nan("") : std::stod(f[4]);
    r.gap = f[5].empty() ? std::nan("") : std::stod(f[5]);
    r.min_gap = f[6].empty() ? std::nan("") : std::stod(f[6]);
    rows.push_back(r);
  }
  return rows;
}

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig qp_protocol_config(std::vector<std::uint64_t> seeds,
                                    const std::string &trace_dir) {
  ExperimentConfig c;
  c.kind = "qp";
  c.qp = {.ell = 100, .m = 100, .n = 100, .w = 0.1, .seed = 0};
  c.algorithms = {Algorithm::nested_sgd, Algorithm::nested_sgdm,
                  Algorithm::static_sgdm};
  c.seeds = std::move(seeds);
  c.xi = 1.0;
  c.delta0 = 0.05;
  c.budget = 10000000;
  c.checkpoint = 1000;
  c.momentum = 0.9;
  c.step_mult_sgd = 1.0;
  c.step_mult_sgdm = 0.5;
  c.oracle_tol = 1e-10;
  c.trace_dir = trace_dir;
  return c;
}

}  // namespace

TEST_CASE("criterion 1: softplus property suite") {
  // All five smoothed-hinge properties on delta in {1e-3,1e-2,1e-1,1},
  // t in [-10,10] step 0.01; max violation <= 1e-9.
  double worst = 0.0;
  const double deltas[] = {1e-3, 1e-2, 1e-1, 1.0};
  const double h = 0.01;
  for (double d : deltas) {
    double prev = softplus(-10.0 - h, d);
    double prev_deriv = softplus_deriv(-10.0 - h, d);
    for (double t = -10.0; t <= 10.0 + 1e-12; t += h) {
      const double v = softplus(t, d);
      // (1)+(5): max(0,t) <= p_delta(t) <= max(0,t) + delta log 2
      worst = std::max(worst, std::max(t, 0.0) - v);
      worst = std::max(worst, v - std::max(t, 0.0) - d * std::log(2.0));
      // convexity via midpoint on adjacent triples
      const double nxt = softplus(t + h, d);
      worst = std::max(worst, v - 0.5 * (prev + nxt));
      // derivative in [0,1] and (1/(4 delta))-Lipschitz on adjacent pairs
      const double dv = softplus_deriv(t, d);
      worst = std::max(worst, -dv);
      worst = std::max(worst, dv - 1.0);
      worst = std::max(worst,
                       std::abs(dv - prev_deriv) - h / (4.0 * d));
      // monotone nondecreasing values
      worst = std::max(worst, prev - v);
      prev = v;
      prev_deriv = dv;
    }
    // delta-monotone sandwich against the exact hinge at delta = 0
    for (double t = -10.0; t <= 10.0 + 1e-12; t += h) {
      const double diff = softplus(t, d) - softplus(t, 0.0);
      worst = std::max(worst, -diff);
      worst = std::max(worst, diff - d * std::log(2.0));
    }
  }
  std::ostringstream os;
  os << "max property violation " << worst << " (tol 1e-9)";
  report(1, worst <= 1e-9, os.str());
}

TEST_CASE("criterion 2: gradient consistency") {
  // Penalty gradient vs central finite differences (h = 1e-6) at 100 random
  // points, QP n=20 m=30, delta in {1, 1e-3}; relative error <= 1e-5.
  const ConstrainedProblem p =
      generate_qp({.ell = 20, .m = 30, .n = 20, .w = 0.2, .seed = 101});
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (double delta : {1.0, 1e-3}) {
    const PenaltyParams params(1.0, delta);
    for (int k = 0; k < 100; ++k) {
      Vector x(20);
      for (int j = 0; j < 20; ++j) x[j] = nd(rng);
      const Vector g = penalty_full_gradient(p, params, x);
      Vector fd(20);
      const double h = 1e-6;
      for (int j = 0; j < 20; ++j) {
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fd[j] = (penalty_objective(p, params, xp) -
                 penalty_objective(p, params, xm)) /
                (2.0 * h);
      }
      worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
    }
  }
  std::ostringstream os;
  os << "max relative gradient error " << worst << " (tol 1e-5)";
  report(2, worst <= 1e-5, os.str());
}

TEST_CASE("criterion 3: distance and residual bound conformance") {
  // Tiny QPs (n=5, m=8, 10 seeds); oracle solves at tol 1e-11 over
  // delta = delta_max 2^-k, k = 0..20, inside every claim's validity range.
  // Measurement allowance sqrt(2 tol / mu) per solve.
  int violations = 0, checks = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const ConstrainedProblem p =
        generate_qp({.ell = 6, .m = 8, .n = 5, .w = 0.5,
                     .seed = 300 + static_cast<std::uint64_t>(seed)});
    const double mu = p.objective->strong_convexity();
    const SpectralInfo &sp = spectral(p);
    const ReferenceSolution ref = solve_reference(p, 1e-11);
    const double xi = std::max(1.0, 2.0 * ref.lambda_inf_norm);
    const double delta_max =
        std::min({(xi / mu) * std::exp(-2.0),
                  sp.s_max * std::max(sp.s_pmin, 1.0) * (xi / mu) *
                      std::exp(-1.0),
                  sp.s_max * sp.s_max * (xi / mu) * std::exp(-2.0)});
    const Vector x0 = penalty_reference(p, PenaltyParams(xi, 0.0), 1e-11);
    const double allow = 2.0 * std::sqrt(2.0 * 1e-11 / mu);
    for (int k = 0; k <= 20; ++k) {
      const double delta = delta_max * std::pow(2.0, -k);
      const PenaltyParams params(xi, delta);
      const Vector xd = penalty_reference(p, params, 1e-11);
      const double dist = (xd - x0).norm();
      const double dbound = distance_bound(params, mu, 8, sp).bound;
      const double res = feasibility_violation(p, xd).l2_violation;
      const double rbound = residual_bound(params, mu, 8, sp);
      ++checks;
      if (dist > dbound + allow) ++violations;
      if (res > rbound + sp.s_max * allow) ++violations;
    }
  }
  std::ostringstream os;
  os << violations << " violations over " << checks
     << " (distance, residual) checks";
  report(3, violations == 0, os.str());
}

TEST_CASE("criterion 4: exact-penalty recovery") {
  // xi = 2 ||lambda*||_inf: smoothed minimizer at delta = 1e-9 lies within
  // 1e-6 + claim-1 bound of the constrained optimum.
  int violations = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const ConstrainedProblem p =
        generate_qp({.ell = 6, .m = 8, .n = 5, .w = 0.5,
                     .seed = 300 + static_cast<std::uint64_t>(seed)});
    const double mu = p.objective->strong_convexity();
    const ReferenceSolution ref = solve_reference(p, 1e-11);
    const double xi = std::max(1.0, 2.0 * ref.lambda_inf_norm);
    const double delta = 1e-9;
    const Vector xd = penalty_reference(p, PenaltyParams(xi, delta), 1e-12);
    const double claim1 =
        std::sqrt(2.0 * 8 * xi * delta * std::log(2.0) / mu);
    if ((xd - ref.x_star).norm() > 1e-6 + claim1) ++violations;
  }
  std::ostringstream os;
  os << violations << " violations over 10 seeds (tol 1e-6 + claim-1 bound)";
  report(4, violations == 0, os.str());
}

TEST_CASE("criterion 5: gradient-mapping sandwich suite") {
  // 1000 random (x_bar, instance) draws, alpha = 1/(2 full_L); both sandwich
  // style inequalities within 1e-8 (1 + |F*|).
  int violations = 0;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int inst = 0; inst < 20; ++inst) {
    const ConstrainedProblem p =
        generate_qp({.ell = 5, .m = 7, .n = 4, .w = 0.4,
                     .seed = 500 + static_cast<std::uint64_t>(inst)});
    std::uniform_real_distribution<double> ud(1e-3, 1.0);
    const PenaltyParams params(1.0, ud(rng));
    const Vector x_ref = penalty_reference(p, params, 1e-13);
    const double f_star = penalty_objective(p, params, x_ref);
    const double alpha =
        1.0 / (2.0 * smoothness_bundle(p, params).full_L);
    for (int k = 0; k < 50; ++k) {
      Vector x(4);
      for (int j = 0; j < 4; ++j) x[j] = 2.0 * nd(rng);
      const SandwichCheck c = sandwich_check(p, params, x, alpha, f_star);
      if (!c.upper_ok || !c.lower_ok) ++violations;
    }
  }
  std::ostringstream os;
  os << violations << " violations over 1000 draws (tol 1e-8 (1+|F*|))";
  report(5, violations == 0, os.str());
}

TEST_CASE("criterion 6: nested stage error bounds") {
  // Full nested run with the certified full-gradient inner solver: every
  // stage that hits its gradient-mapping target satisfies
  // ||x_tilde_t - x*|| <= (min(m, 4 sqrt(m)/s_pmin) + sqrt(m))
  //                       * delta_t log(xi s_max / (mu delta_t)).
  int violations = 0, certified = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const ConstrainedProblem p =
        generate_qp({.ell = 6, .m = 8, .n = 5, .w = 0.5,
                     .seed = 600 + static_cast<std::uint64_t>(seed)});
    const double mu = p.objective->strong_convexity();
    const SpectralInfo &sp = spectral(p);
    const ReferenceSolution ref = solve_reference(p, 1e-11);
    const double xi = std::max(1.0, 2.0 * ref.lambda_inf_norm);
    NestedConfig cfg;
    cfg.xi = xi;
    cfg.eta = 2.0;
    cfg.target_eps = 1e-6;
    cfg.solver.kind = SolverKind::accel_full;
    cfg.budget_multiplier = 200.0;
    const NestedResult res = run_nested(p, cfg);
    const double c_geom =
        std::min(8.0, 4.0 * std::sqrt(8.0) / sp.s_pmin) + std::sqrt(8.0);
    for (const NestedStage &st : res.stages) {
      if (st.guarantees_void) continue;
      ++certified;
      const double bound = c_geom * st.delta_t *
                           std::log(xi * sp.s_max / (mu * st.delta_t));
      if ((st.x_tilde - ref.x_star).norm() > bound) ++violations;
    }
  }
  std::ostringstream os;
  os << violations << " violations over " << certified
     << " certified stages (10 seeds)";
  report(6, violations == 0 && certified > 0, os.str());
}

TEST_CASE("criterion 7: duality certificates") {
  // (a) weak duality at every trace checkpoint of nested test runs;
  // (b) with delta <= eps/(2 m log 2) and primal gap <= xi eps, the
  //     certified gap is <= 2 xi eps + 1e-8.
  int weak_violations = 0, weak_checks = 0;
  for (SolverKind kind :
       {SolverKind::sgd, SolverKind::sgdm, SolverKind::svrg}) {
    for (std::uint64_t seed : {0ULL, 1ULL}) {
      const ConstrainedProblem p =
          generate_qp({.ell = 10, .m = 12, .n = 8, .w = 0.3,
                       .seed = 700 + seed});
      const ConjugateOracle conj(p);
      NestedConfig cfg;
      cfg.xi = 1.0;
      cfg.delta0 = 0.05;
      cfg.total_budget = 200000;
      cfg.checkpoint_period = 1000;
      cfg.seed = seed;
      cfg.solver.kind = kind;
      if (kind == SolverKind::sgdm) cfg.solver.momentum_alpha = 0.9;
      run_nested(p, cfg, [&](const Checkpoint &cp, const Vector &x) {
        const PenaltyParams params(cfg.xi, cp.delta_t);
        const DualCertificate c =
            duality_gap(p, x, params, *cp.S_hat, conj);
        ++weak_checks;
        if (c.gap < -1e-8 * (1.0 + std::abs(c.primal_value)))
          ++weak_violations;
      });
    }
  }
  int cert_violations = 0;
  for (int seed = 0; seed < 5; ++seed) {
    const ConstrainedProblem p =
        generate_qp({.ell = 6, .m = 8, .n = 5, .w = 0.5,
                     .seed = 710 + static_cast<std::uint64_t>(seed)});
    const ConjugateOracle conj(p);
    const ReferenceSolution ref = solve_reference(p, 1e-11);
    const double xi = std::max(1.0, 2.0 * ref.lambda_inf_norm);
    const double eps = 1e-4;
    const double delta = eps / (2.0 * 8 * std::log(2.0));
    const PenaltyParams params(xi, delta);
    // F-gap tolerance well inside xi * eps
    const Vector x_hat = penalty_reference(p, params, 1e-3 * xi * eps);
    const DualCertificate c =
        duality_gap(p, x_hat, params, full_index_set(8), conj);
    if (c.gap > 2.0 * xi * eps + 1e-8 || c.gap < -1e-8) ++cert_violations;
  }
  std::ostringstream os;
  os << weak_violations << " weak-duality violations over " << weak_checks
     << " checkpoints; " << cert_violations
     << " certificate-bound violations over 5 instances";
  report(7, weak_violations == 0 && cert_violations == 0 && weak_checks > 0,
         os.str());
}

TEST_CASE("criterion 8: screening safety") {
  // 20 random QPs (n=20, m=200), xi >= 2 ||lambda*||_inf: no constraint with
  // oracle slack <= activity tol is ever dropped, and the surviving set lies
  // inside the certified slack band of the last screening stage.
  int safety_violations = 0, band_violations = 0, dropped_total = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const ConstrainedProblem p =
        generate_qp({.ell = 20, .m = 200, .n = 20, .w = 0.3,
                     .seed = 800 + static_cast<std::uint64_t>(seed)});
    const ReferenceSolution ref = solve_reference(p, 1e-10);
    const double xi = std::max(1.0, 2.0 * ref.lambda_inf_norm);
    NestedConfig cfg;
    cfg.xi = xi;
    cfg.target_eps = 1e-5;
    cfg.solver.kind = SolverKind::accel_full;
    cfg.budget_multiplier = 200.0;
    cfg.screening = true;
    const NestedResult res = run_nested(p, cfg);
    const IndexSet &kept = res.stages.back().S_hat;
    std::vector<bool> survived(200, false);
    for (int i : kept) survived[i] = true;
    const double activity_tol =
        1e-7 * (1.0 + p.constraints.b().cwiseAbs().maxCoeff());
    auto slack_at_star = [&](int i) {
      return p.constraints.b()[i] -
             p.constraints.row_dot(i, ref.x_star);
    };
    for (int i = 0; i < 200; ++i) {
      if (survived[i]) continue;
      ++dropped_total;
      if (slack_at_star(i) <= activity_tol) ++safety_violations;
    }
    // slack band of the last stage that actually screened
    const NestedStage *last_screen = nullptr;
    for (const NestedStage &st : res.stages)
      if (st.screening_applied) last_screen = &st;
    if (last_screen) {
      const double band = last_screen->screen.delta_full_t;
      for (int i : kept)
        if (slack_at_star(i) > band + 1e-10) ++band_violations;
    }
  }
  std::ostringstream os;
  os << safety_violations << " active-constraint drops and "
     << band_violations << " band violations (" << dropped_total
     << " constraints dropped across 20 instances)";
  report(8, safety_violations == 0 && band_violations == 0 &&
                dropped_total > 0,
         os.str());
}

TEST_CASE("criterion 9: qp experiment reproduction") {
  // l = m = n = 100, w = 0.1, xi = 1, delta0 = 0.05, 1e7 incremental steps,
  // 20 seeds. (a) median final rel_error ordering; (b) static plateau within
  // factor 3 of distance_bound(delta0)/||x*||; (c) nested momentum min gap
  // decreases >= 100x from its first checkpoint.
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  const ExperimentConfig cfg = qp_protocol_config(seeds, "acceptance_qp");
  const ExperimentResult res = run_experiment(cfg);

  std::map<std::string, std::vector<double>> rel;
  std::vector<double> plateau_ratios, gap_drops;
  for (const RunSummary &s : res.runs) {
    rel[s.algorithm].push_back(s.final_rel_error);
    if (s.algorithm == "static-sgdm") {
      const ConstrainedProblem p = generate_qp(
          {.ell = 100, .m = 100, .n = 100, .w = 0.1, .seed = s.seed});
      const ReferenceSolution ref = solve_reference(p, 1e-10);
      const double predicted =
          distance_bound(PenaltyParams(cfg.xi, cfg.delta0),
                         p.objective->strong_convexity(), 100, spectral(p))
              .bound /
          ref.x_star.norm();
      plateau_ratios.push_back(s.final_rel_error / predicted);
    }
    if (s.algorithm == "nested-sgdm") {
      const std::vector<TraceRow> rows = read_trace(s.trace_file);
      REQUIRE(rows.size() >= 2);
      gap_drops.push_back(rows.front().gap / rows.back().min_gap);
    }
  }
  const double med_sgdm = median(rel["nested-sgdm"]);
  const double med_sgd = median(rel["nested-sgd"]);
  const double med_static = median(rel["static-sgdm"]);
  const bool ordering = med_sgdm < med_sgd && med_sgd < med_static;
  const double med_plateau = median(plateau_ratios);
  const bool plateau = med_plateau >= 1.0 / 3.0 && med_plateau <= 3.0;
  const double min_drop =
      *std::min_element(gap_drops.begin(), gap_drops.end());
  const bool gap_ok = min_drop >= 100.0;
  std::ostringstream os;
  os << "median rel_error sgdm " << med_sgdm << " < sgd " << med_sgd
     << " < static " << med_static << " [" << (ordering ? "ok" : "VIOLATED")
     << "]; plateau ratio " << med_plateau << " in [1/3,3] ["
     << (plateau ? "ok" : "VIOLATED") << "]; min gap drop " << min_drop
     << "x >= 100x [" << (gap_ok ? "ok" : "VIOLATED") << "]";
  report(9, ordering && plateau && gap_ok, os.str());
}

TEST_CASE("criterion 10: svm experiment") {
  // Data-dependent; skipped when the mushrooms file is absent.
  std::string path;
  if (const char *env = std::getenv("SOFTPEN_MUSHROOMS")) path = env;
  for (const char *cand :
       {"data/mushrooms", "../data/mushrooms", "../../data/mushrooms"})
    if (path.empty() && std::filesystem::exists(cand)) path = cand;
  if (path.empty() || !std::filesystem::exists(path)) {
    std::cout << "criterion 10: SKIP — mushrooms dataset not available "
                 "(set SOFTPEN_MUSHROOMS or place data/mushrooms)"
              << std::endl;
    return;
  }
  std::ifstream in(path);
  const SvmDataset data = parse_libsvm(in);
  REQUIRE(data.m == 8124);
  REQUIRE(data.n == 112);
  const ConstrainedProblem p = build_svm_problem(data);
  const ReferenceSolution ref = solve_reference(p, 1e-9);
  auto slack = [&](int i) {
    return p.constraints.b()[i] - p.constraints.row_dot(i, ref.x_star);
  };

  auto run = [&](bool screening) {
    NestedConfig cfg;
    cfg.xi = 1.0;
    cfg.delta0 = 0.005;
    cfg.total_budget = 20000000;
    cfg.checkpoint_period = 10000;
    cfg.solver.kind = SolverKind::svrg;
    cfg.screening = screening;
    std::vector<std::pair<long, double>> err_trace;
    const NestedResult r =
        run_nested(p, cfg, [&](const Checkpoint &cp, const Vector &x) {
          err_trace.emplace_back(cp.steps,
                                 (x - ref.x_star).norm() /
                                     ref.x_star.norm());
        });
    return std::make_pair(r, err_trace);
  };
  const auto [scr, scr_trace] = run(true);
  const auto [plain, plain_trace] = run(false);

  std::vector<bool> kept(p.num_constraints(), false);
  for (int i : scr.stages.back().S_hat) kept[i] = true;
  int tight_lost = 0, loose_total = 0, loose_kept = 0;
  for (int i = 0; i < p.num_constraints(); ++i) {
    if (slack(i) < 1e-7 && !kept[i]) ++tight_lost;
    if (slack(i) > 1e-3) {
      ++loose_total;
      if (kept[i]) ++loose_kept;
    }
  }
  const bool keep_ok = tight_lost == 0;
  const bool drop_ok =
      loose_total > 0 &&
      (loose_total - loose_kept) >= 0.95 * loose_total;
  const double target_err =
      (scr.x_final - ref.x_star).norm() / ref.x_star.norm();
  long matched_steps = plain.total_incremental_steps;
  for (const auto &[steps, err] : plain_trace)
    if (err <= target_err) {
      matched_steps = steps;
      break;
    }
  const bool speed_ok = scr.total_incremental_steps <= matched_steps;
  std::ostringstream os;
  os << tight_lost << " tight constraints lost; " << (loose_total - loose_kept)
     << "/" << loose_total << " loose constraints dropped; screening/plain "
     << "steps at matched error " << scr.total_incremental_steps << "/"
     << matched_steps;
  report(10, keep_ok && drop_ok && speed_ok, os.str());
}

TEST_CASE("criterion 11: determinism") {
  // The criterion-9 protocol rerun with identical seeds is byte-identical.
  const ExperimentConfig c1 = qp_protocol_config({0}, "acceptance_det_a");
  const ExperimentConfig c2 = qp_protocol_config({0}, "acceptance_det_b");
  const ExperimentResult r1 = run_experiment(c1);
  const ExperimentResult r2 = run_experiment(c2);
  REQUIRE(r1.runs.size() == r2.runs.size());
  bool identical = true;
  for (std::size_t i = 0; i < r1.runs.size(); ++i) {
    const std::string a = slurp(r1.runs[i].trace_file);
    const std::string b = slurp(r2.runs[i].trace_file);
    if (a.empty() || a != b) identical = false;
  }
  std::ostringstream os;
  os << r1.runs.size() << " trace pairs byte-compared";
  report(11, identical, os.str());
}
