#include <doctest.h>

#include "softpen/libsvm.hpp"
#include "softpen/qp_gen.hpp"
#include "softpen/solvers.hpp"

using namespace softpen;

namespace {

// min 0.5 x^2 with one (ignored) constraint; empty subsets make the smooth
// part the only component.
ConstrainedProblem scalar_problem() {
  ConstrainedProblem p;
  p.objective = std::make_shared<UnitQuadratic>(1);
  p.prox = ProximalTerm::zero();
  Matrix a(1, 1);
  a << 1.0;
  Vector b(1);
  b << -1.0;
  p.constraints = LinearConstraints::normalize_rows(a, b);
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("solvers");

TEST_CASE("sgd with a single deterministic component is proximal gradient") {
  const ConstrainedProblem p = scalar_problem();
  const PenaltyParams params(1.0, 0.1);
  const IndexSet empty;
  SolverConfig cfg;
  cfg.kind = SolverKind::sgd;
  cfg.step_size = 0.5;
  std::mt19937_64 rng(0);

  for (long k : {1L, 3L, 10L}) {
    cfg.budget = k;
    std::mt19937_64 r(0);
    const InnerResult res = sgd_solve(p, params, empty, Vector::Ones(1),
                                      cfg, r);
    CHECK(res.x_hat[0] == doctest::Approx(std::pow(0.5, k)).epsilon(1e-14));
    CHECK(res.incremental_steps == k);
    CHECK(res.stop_reason == StopReason::budget);
  }
}

TEST_CASE("sgdm matches the hand-rolled two-line recurrence") {
  const ConstrainedProblem p = scalar_problem();
  const PenaltyParams params(1.0, 0.1);
  const IndexSet empty;
  SolverConfig cfg;
  cfg.kind = SolverKind::sgdm;
  cfg.step_size = 0.1;
  cfg.momentum_alpha = 0.9;

  double x = 1.0, v = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double lookahead = x + 0.9 * v;
    v = 0.9 * v - 0.1 * lookahead;  // grad of 0.5 x^2 is x
    x += v;
    cfg.budget = k;
    std::mt19937_64 r(0);
    const InnerResult res = sgdm_solve(p, params, empty, Vector::Ones(1),
                                       cfg, r);
    CHECK(res.x_hat[0] == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("sgdm with zero momentum replays sgd under a shared stream") {
  const ConstrainedProblem p =
      generate_qp({.ell = 5, .m = 6, .n = 4, .w = 0.3, .seed = 21});
  const PenaltyParams params(1.0, 0.05);
  const IndexSet full = full_index_set(6);
  SolverConfig cfg;
  cfg.step_size = 0.01;
  cfg.budget = 500;

  cfg.kind = SolverKind::sgd;
  std::mt19937_64 r1(77);
  const InnerResult a = sgd_solve(p, params, full, Vector::Zero(4), cfg, r1);
  cfg.kind = SolverKind::sgdm;
  cfg.momentum_alpha = 0.0;
  std::mt19937_64 r2(77);
  const InnerResult b = sgdm_solve(p, params, full, Vector::Zero(4), cfg, r2);
  CHECK((a.x_hat - b.x_hat).norm() == 0.0);
}

TEST_CASE("sgdm rejects momentum outside [0,1)") {
  const ConstrainedProblem p = scalar_problem();
  SolverConfig cfg;
  cfg.kind = SolverKind::sgdm;
  cfg.step_size = 0.1;
  cfg.momentum_alpha = 1.0;
  std::mt19937_64 r(0);
  CHECK_THROWS_AS(
      sgdm_solve(p, PenaltyParams(1.0, 0.1), {}, Vector::Ones(1), cfg, r),
      invalid_params);
}

TEST_CASE("svrg reduces to full proximal gradient with one component") {
  const ConstrainedProblem p = scalar_problem();
  const PenaltyParams params(1.0, 0.1);
  SolverConfig cfg;
  cfg.kind = SolverKind::svrg;
  cfg.step_size = 0.5;
  cfg.budget = 25;
  std::mt19937_64 r(0);
  const InnerResult res = svrg_solve(p, params, {}, Vector::Ones(1), cfg, r);
  // variance-reduced gradient is exact here, so each stochastic step halves x
  CHECK(res.x_hat[0] ==
        doctest::Approx(std::pow(0.5, res.stochastic_steps)).epsilon(1e-13));
  CHECK(res.incremental_steps ==
        res.stochastic_steps + res.full_gradient_evals + res.prox_evals);
}

TEST_CASE("svrg checkpoint at the anchor can stop on target") {
  const ConstrainedProblem p =
      generate_qp({.ell = 4, .m = 5, .n = 3, .w = 0.4, .seed = 22});
  const PenaltyParams params(1.0, 0.05);
  SolverConfig cfg;
  cfg.kind = SolverKind::svrg;
  cfg.step_size = 1e-3;
  cfg.budget = 100000;
  cfg.check_period = 1;  // enables the anchor checkpoint
  cfg.target_gmap_norm = 1e9;
  std::mt19937_64 r(5);
  const InnerResult res =
      svrg_solve(p, params, full_index_set(5), Vector::Zero(3), cfg, r);
  CHECK(res.stop_reason == StopReason::gmap_target);
  CHECK(res.final_gmap_norm.has_value());
  CHECK(res.incremental_steps == p.ell() + 5);  // one anchor pass only
}

TEST_CASE("step accounting identity with a nonzero prox") {
  ConstrainedProblem p =
      generate_qp({.ell = 5, .m = 6, .n = 4, .w = 0.3, .seed = 23});
  p.prox = ProximalTerm::squared_norm(0.1);
  const PenaltyParams params(1.0, 0.05);
  const IndexSet full = full_index_set(6);
  SolverConfig cfg;
  cfg.step_size = 0.01;
  cfg.budget = 1000;
  cfg.check_period = 100;
  cfg.target_gmap_norm = 0.0;  // never reached, exercises checks

  for (SolverKind kind :
       {SolverKind::sgd, SolverKind::sgdm, SolverKind::svrg}) {
    cfg.kind = kind;
    std::mt19937_64 r(3);
    const InnerResult res =
        inner_solve(p, params, full, Vector::Zero(4), cfg, r);
    CHECK(res.incremental_steps ==
          res.stochastic_steps + (p.ell() + 6) * res.full_gradient_evals +
              res.prox_evals);
    CHECK(res.incremental_steps <= cfg.budget + p.ell() + 6);
  }
}

TEST_CASE("solvers are bit-deterministic for a fixed seed") {
  const ConstrainedProblem p =
      generate_qp({.ell = 5, .m = 6, .n = 4, .w = 0.3, .seed = 24});
  const PenaltyParams params(1.0, 0.05);
  const IndexSet full = full_index_set(6);
  SolverConfig cfg;
  cfg.step_size = 0.01;
  cfg.budget = 2000;
  for (SolverKind kind :
       {SolverKind::sgd, SolverKind::sgdm, SolverKind::svrg,
        SolverKind::accel_full}) {
    cfg.kind = kind;
    std::mt19937_64 r1(9), r2(9);
    const InnerResult a = inner_solve(p, params, full, Vector::Zero(4), cfg, r1);
    const InnerResult b = inner_solve(p, params, full, Vector::Zero(4), cfg, r2);
    CHECK((a.x_hat - b.x_hat).norm() == 0.0);
    CHECK(a.incremental_steps == b.incremental_steps);
  }
}

TEST_CASE("accelerated full gradient hits its gradient-mapping target") {
  const ConstrainedProblem p =
      generate_qp({.ell = 10, .m = 12, .n = 8, .w = 0.2, .seed = 25});
  const PenaltyParams params(1.0, 0.02);
  SolverConfig cfg;
  cfg.kind = SolverKind::accel_full;
  cfg.budget = 1000000;
  cfg.target_gmap_norm = 1e-8;
  std::mt19937_64 r(0);
  const InnerResult res =
      accel_full_solve(p, params, full_index_set(12), Vector::Zero(8), cfg);
  CHECK(res.stop_reason == StopReason::gmap_target);
  CHECK(*res.final_gmap_norm <= 1e-8);
  // scalar warm-up: one step lands exactly on the minimizer
  const ConstrainedProblem s = scalar_problem();
  SolverConfig c2;
  c2.kind = SolverKind::accel_full;
  c2.budget = 200;
  c2.target_gmap_norm = 1e-6;
  const InnerResult r2 =
      accel_full_solve(s, PenaltyParams(1.0, 0.1), {}, Vector::Ones(1), c2);
  CHECK(std::abs(r2.x_hat[0]) <= 1e-6);
  CHECK(r2.full_gradient_evals <= 60);
}

TEST_CASE("divergence raises non_finite_iterate") {
  const ConstrainedProblem p =
      generate_qp({.ell = 5, .m = 6, .n = 4, .w = 0.3, .seed = 26});
  const PenaltyParams params(1.0, 0.05);
  SolverConfig cfg;
  cfg.kind = SolverKind::sgd;
  cfg.step_size = 1e6;
  cfg.budget = 50000;
  std::mt19937_64 r(1);
  CHECK_THROWS_AS(
      sgd_solve(p, params, full_index_set(6), Vector::Ones(4), cfg, r),
      non_finite_iterate);
}

TEST_CASE("stalled checkpoints stop the solver") {
  const ConstrainedProblem p =
      generate_qp({.ell = 5, .m = 6, .n = 4, .w = 0.3, .seed = 27});
  const PenaltyParams params(1.0, 0.05);
  SolverConfig cfg;
  cfg.kind = SolverKind::sgd;
  cfg.step_size = 1e-18;  // frozen iterates
  cfg.budget = 100000;
  cfg.check_period = 10;
  cfg.target_gmap_norm = 1e-12;
  std::mt19937_64 r(2);
  const InnerResult res =
      sgd_solve(p, params, full_index_set(6), Vector::Ones(4), cfg, r);
  CHECK(res.stop_reason == StopReason::stall);
}

TEST_SUITE_END();
