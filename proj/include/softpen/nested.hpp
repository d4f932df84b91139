#ifndef SOFTPEN_NESTED_HPP
#define SOFTPEN_NESTED_HPP

#include <cstdint>
#include <functional>

#include "softpen/solvers.hpp"

namespace softpen {

// --- parameter schedules ---------------------------------------------------

// eps_t = min{ 1/2 m mu d^2 log^2(xi s_max/(mu d)), m xi d log(xi s_max/(mu d)) }
inline double stage_accuracy(double delta_t, int m_hat, double mu, double xi,
                             double s_max) {
  if (!(delta_t > 0.0) || delta_t > (xi / mu) * std::exp(-2.0) * (1.0 + 1e-12))
    throw out_of_validity_range(
        "stage_accuracy: need 0 < delta_t <= (xi/mu) e^-2");
  const double lg = std::log(xi * s_max / (mu * delta_t));
  const double m = static_cast<double>(m_hat);
  return std::min(0.5 * m * mu * delta_t * delta_t * lg * lg,
                  m * xi * delta_t * lg);
}

// alpha_t = 1 / (L + xi s_max^2 / (4 delta_t)); the prox-forward step, equal
// to 1/full_L of the stage reformulation.
inline double stage_step_size(double delta_t, double L, double xi,
                              double s_max) {
  if (!(delta_t > 0.0)) throw invalid_params("stage_step_size: delta_t > 0");
  return 1.0 / (L + xi * s_max * s_max / (4.0 * delta_t));
}

struct OuterTermination {
  int T;
  double delta_T;
};

// Smallest positive T with 2 m delta_T log(xi s_max/(mu delta_T)) <= eps,
// delta_T = delta0 / eta^T.
inline OuterTermination outer_termination(int m_hat, double xi, double mu,
                                          double s_max, double target_eps,
                                          double delta0, double eta) {
  if (!(target_eps > 0.0) ||
      target_eps > (m_hat * xi / mu) * std::exp(-2.0) * (1.0 + 1e-12))
    throw invalid_target("outer_termination: need 0 < eps <= (m xi/mu) e^-2");
  if (!(eta > 1.0) || !(delta0 > 0.0))
    throw invalid_params("outer_termination: eta > 1, delta0 > 0");
  for (int T = 1; T <= 200000; ++T) {
    const double d = delta0 / std::pow(eta, T);
    const double lg = std::log(xi * s_max / (mu * d));
    if (lg > 0.0 && 2.0 * m_hat * d * lg <= target_eps) return {T, d};
  }
  throw convergence_failure("outer_termination: no T <= 200000");
}

// Per-stage incremental-step limit. With Q = L/mu + m xi/(4 mu delta):
//   sgd, svrg:  ceil(mult * log(2 eta - 1) * Q)
//   sgdm:       ceil(mult * (2 log(2 eta - 1) + log Q) * sqrt(m Q))
//   accel_full: ceil(mult * (2 log(2 eta - 1) + log Q) * sqrt(Q)) iterations,
//               each costing ell + m incremental steps.
inline long theoretical_budget(double eta, double L, double mu, int m_hat,
                               double xi, double delta, int ell,
                               SolverKind kind, double multiplier) {
  if (!(delta > 0.0) || !(eta > 1.0) || !(multiplier > 0.0))
    throw invalid_params("theoretical_budget: delta, eta, multiplier");
  const double Q = L / mu + m_hat * xi / (4.0 * mu * delta);
  const double lg_eta = std::log(2.0 * eta - 1.0);
  double v = 0.0;
  switch (kind) {
    case SolverKind::sgd:
    case SolverKind::svrg:
      v = multiplier * lg_eta * Q;
      break;
    case SolverKind::sgdm:
      v = multiplier * (2.0 * lg_eta + std::log(Q)) * std::sqrt(m_hat * Q);
      break;
    case SolverKind::accel_full:
      v = multiplier * (2.0 * lg_eta + std::log(Q)) * std::sqrt(Q) *
          static_cast<double>(ell + m_hat);
      break;
  }
  return static_cast<long>(std::ceil(v));
}

// --- screening -------------------------------------------------------------

struct ScreeningRule {
  double threshold_t;   // -2 sqrt(m_hat) delta_t log(m_hat xi/(mu delta_t))
  double delta_hat_t;   // 4 sqrt(m_hat) delta_t log(m_hat xi/(mu delta_t))
  double delta_full_t;  // 4 sqrt(m)     delta_t log(m     xi/(mu delta_t))
  bool valid;           // m_hat xi/(mu delta_t) > 1
};

inline ScreeningRule screening_rule(int m_hat, int m, double delta_t,
                                    double mu, double xi) {
  ScreeningRule r;
  const double z_hat = m_hat * xi / (mu * delta_t);
  const double z_full = m * xi / (mu * delta_t);
  r.valid = z_hat > 1.0;
  const double root_mh = std::sqrt(static_cast<double>(m_hat));
  r.threshold_t = r.valid ? -2.0 * root_mh * delta_t * std::log(z_hat) : 0.0;
  r.delta_hat_t = r.valid ? 2.0 * -r.threshold_t : 0.0;
  r.delta_full_t = z_full > 1.0 ? 4.0 * std::sqrt(static_cast<double>(m)) *
                                      delta_t * std::log(z_full)
                                : 0.0;
  return r;
}

// Keep i with a_i^T x_tilde - b_i >= threshold_t; never grows.
inline IndexSet apply_screening(const Vector &x_tilde, const IndexSet &S_hat,
                                const ScreeningRule &rule,
                                const LinearConstraints &constraints) {
  IndexSet kept;
  kept.reserve(S_hat.size());
  for (int i : S_hat) {
    const double slack = constraints.row_dot(i, x_tilde) - constraints.b()[i];
    if (slack >= rule.threshold_t) kept.push_back(i);
  }
  return kept;
}

// --- driver ----------------------------------------------------------------

struct NestedConfig {
  double xi = 1.0;
  double eta = 2.0;
  double delta0 = 0.0;      // 0 -> (xi/mu) e^-2
  double target_eps = 0.0;  // 0 -> run until total_budget exhausted
  SolverConfig solver;      // kind / momentum / anchor / check_period template
  bool screening = false;
  bool final_boost = false;
  double budget_multiplier = 1.0;
  double step_multiplier = 1.0;  // scales the base step 1/(L+mu+m xi/(4 d))
  long total_budget = 0;         // cap on incremental steps; 0 = unlimited
  long checkpoint_period = 0;    // trace cadence; 0 = no checkpoints
  std::uint64_t seed = 0;
  Vector x0;  // empty -> zeros

  void validate() const {
    if (!(xi > 0.0) || !(eta > 1.0) || delta0 < 0.0 || target_eps < 0.0 ||
        !(budget_multiplier > 0.0) || !(step_multiplier > 0.0))
      throw invalid_params("nested config: xi>0, eta>1, nonneg delta0/eps");
    if (target_eps == 0.0 && total_budget <= 0)
      throw invalid_params("nested config: need target_eps or total_budget");
  }
};

struct NestedStage {
  int t = 0;
  double delta_t = 0.0;
  double eps_t = 0.0;
  double alpha_t = 0.0;
  IndexSet S_hat;  // surviving set used by this stage
  int m_hat = 0;
  Vector x_tilde;
  InnerResult inner;
  long budget = 0;
  ScreeningRule screen{};        // rule applied after this stage (if any)
  bool screening_applied = false;
  bool guarantees_void = false;  // inner exit was budget/stall, not target
};

struct Checkpoint {
  long steps;  // global incremental-step count
  int stage_t;
  double delta_t;
  int m_hat;
  const IndexSet *S_hat;  // surviving set of the emitting stage
};
using CheckpointFn = std::function<void(const Checkpoint &, const Vector &)>;

struct NestedResult {
  Vector x_final;
  std::vector<NestedStage> stages;
  long total_incremental_steps = 0;
  bool screening_emptied = false;
};

inline double base_step_size(const ConstrainedProblem &p, double xi,
                             double delta, int m_hat, double multiplier) {
  return multiplier / (p.objective->lipschitz() +
                       p.objective->strong_convexity() +
                       m_hat * xi / (4.0 * delta));
}

namespace detail {

inline std::mt19937_64 stage_rng(std::uint64_t master, int stage) {
  std::seed_seq seq{
      static_cast<unsigned long long>(master),
      static_cast<unsigned long long>(stage) + 0x9e3779b97f4a7c15ULL};
  return std::mt19937_64(seq);
}

}  // namespace detail

// Algorithm: shrink delta geometrically, warm-starting each inner solve at
// the previous prox-forward point; optional screening between stages.
inline NestedResult run_nested(const ConstrainedProblem &p,
                               const NestedConfig &cfg,
                               const CheckpointFn &on_checkpoint = nullptr) {
  cfg.validate();
  const double mu = p.objective->strong_convexity();
  const double L = p.objective->lipschitz();
  const double s_max = spectral(p).s_max;
  const double s_pmin = spectral(p).s_pmin;
  const int m = p.num_constraints();
  const double delta0 =
      cfg.delta0 > 0.0 ? cfg.delta0 : (cfg.xi / mu) * std::exp(-2.0);

  int T = -1;  // -1: no accuracy-driven stop; run on budget
  if (cfg.target_eps > 0.0)
    T = outer_termination(m, cfg.xi, mu, s_max, cfg.target_eps, delta0,
                          cfg.eta).T;

  NestedResult res;
  Vector x = cfg.x0.size() > 0 ? cfg.x0 : Vector::Zero(p.dim());
  if (x.size() != p.dim()) throw invalid_params("x0 dimension mismatch");
  IndexSet S = full_index_set(m);
  long global = 0;

  for (int t = 0;; ++t) {
    NestedStage st;
    st.t = t;
    st.delta_t = delta0 / std::pow(cfg.eta, t);
    st.S_hat = S;
    st.m_hat = static_cast<int>(S.size());
    const bool last = (T >= 0 && t == T);
    const PenaltyParams params(cfg.xi, st.delta_t);

    st.eps_t = stage_accuracy(st.delta_t, st.m_hat, mu, cfg.xi, s_max);
    if (cfg.final_boost && last) {
      const double lg = std::log(cfg.xi * s_max / (mu * st.delta_t));
      st.eps_t = st.m_hat * mu * st.delta_t * st.delta_t * lg * lg /
                 (2.0 * s_pmin);
    }
    st.alpha_t = stage_step_size(st.delta_t, L, cfg.xi, s_max);

    st.budget = theoretical_budget(cfg.eta, L, mu, st.m_hat, cfg.xi,
                                   st.delta_t, p.ell(), cfg.solver.kind,
                                   cfg.budget_multiplier);
    if (cfg.total_budget > 0) {
      const long remaining = cfg.total_budget - global;
      if (remaining <= 0) break;
      st.budget = std::min(st.budget, remaining);
    }

    SolverConfig scfg = cfg.solver;
    scfg.budget = st.budget;
    scfg.target_gmap_norm = std::sqrt(2.0 * mu * st.eps_t);
    if (scfg.kind != SolverKind::accel_full)
      scfg.step_size = base_step_size(p, cfg.xi, st.delta_t, st.m_hat,
                                      cfg.step_multiplier);

    StepTracker tracker;
    tracker.global_offset = global;
    tracker.period = cfg.checkpoint_period;
    if (on_checkpoint)
      tracker.on_checkpoint = [&](long steps, const Vector &xi_cur) {
        on_checkpoint({steps, st.t, st.delta_t, st.m_hat, &st.S_hat}, xi_cur);
      };

    std::mt19937_64 rng = detail::stage_rng(cfg.seed, t);
    st.inner = inner_solve(p, params, S, x, scfg, rng,
                           on_checkpoint ? &tracker : nullptr);
    global += st.inner.incremental_steps;
    st.guarantees_void = st.inner.stop_reason != StopReason::gmap_target;

    // prox-forward step at the certified stage step size
    const MappingResult map =
        gradient_mapping(p, params, st.inner.x_hat, st.alpha_t, S);
    st.x_tilde = map.x_tilde;
    global += p.ell() + st.m_hat + (p.prox.is_zero() ? 0 : 1);
    x = st.x_tilde;

    if (cfg.screening) {
      st.screen = screening_rule(st.m_hat, m, st.delta_t, mu, cfg.xi);
      if (st.screen.valid) {
        S = apply_screening(st.x_tilde, S, st.screen, p.constraints);
        st.screening_applied = true;
        if (S.empty()) res.screening_emptied = true;
      }
    }

    res.stages.push_back(std::move(st));
    if (last) break;
    if (cfg.total_budget > 0 && global >= cfg.total_budget) break;
    if (T < 0 && t >= 200000)
      throw convergence_failure("run_nested: stage count runaway");
  }

  res.x_final = x;
  res.total_incremental_steps = global;
  return res;
}

// delta_eps = eps/(4m) * (log(2 m xi s_max/(mu eps)))^-1; static baseline.
inline double static_delta(int m, double xi, double mu, double s_max,
                           double eps) {
  if (!(eps > 0.0) || eps > (m * xi / mu) * std::exp(-2.0) * (1.0 + 1e-12))
    throw invalid_target("static_delta: need 0 < eps <= (m xi/mu) e^-2");
  return eps / (4.0 * m) / std::log(2.0 * m * xi * s_max / (mu * eps));
}

// Single-stage solve of F_{xi,delta} at a fixed delta (delta_override > 0) or
// at the accuracy-matched delta_eps derived from cfg.target_eps.
inline NestedResult run_static(const ConstrainedProblem &p,
                               const NestedConfig &cfg,
                               double delta_override = 0.0,
                               const CheckpointFn &on_checkpoint = nullptr) {
  cfg.validate();
  const double mu = p.objective->strong_convexity();
  const double s_max = spectral(p).s_max;
  const int m = p.num_constraints();
  const double delta =
      delta_override > 0.0
          ? delta_override
          : static_delta(m, cfg.xi, mu, s_max, cfg.target_eps);

  NestedResult res;
  NestedStage st;
  st.t = 0;
  st.delta_t = delta;
  st.S_hat = full_index_set(m);
  st.m_hat = m;
  st.eps_t = cfg.target_eps;
  st.alpha_t = stage_step_size(delta, p.objective->lipschitz(), cfg.xi, s_max);
  st.budget = cfg.total_budget > 0
                  ? cfg.total_budget
                  : theoretical_budget(cfg.eta, p.objective->lipschitz(), mu,
                                       m, cfg.xi, delta, p.ell(),
                                       cfg.solver.kind, cfg.budget_multiplier);

  SolverConfig scfg = cfg.solver;
  scfg.budget = st.budget;
  scfg.target_gmap_norm =
      cfg.target_eps > 0.0 ? std::sqrt(2.0 * mu * cfg.target_eps) : 0.0;
  if (scfg.kind != SolverKind::accel_full)
    scfg.step_size =
        base_step_size(p, cfg.xi, delta, m, cfg.step_multiplier);

  StepTracker tracker;
  tracker.period = cfg.checkpoint_period;
  if (on_checkpoint)
    tracker.on_checkpoint = [&](long steps, const Vector &xc) {
      on_checkpoint({steps, 0, delta, m, &st.S_hat}, xc);
    };

  Vector x = cfg.x0.size() > 0 ? cfg.x0 : Vector::Zero(p.dim());
  std::mt19937_64 rng = detail::stage_rng(cfg.seed, 0);
  const PenaltyParams params(cfg.xi, delta);
  st.inner = inner_solve(p, params, st.S_hat, x, scfg, rng,
                         on_checkpoint ? &tracker : nullptr);
  st.guarantees_void = st.inner.stop_reason != StopReason::gmap_target;
  st.x_tilde = st.inner.x_hat;
  res.x_final = st.inner.x_hat;
  res.total_incremental_steps = st.inner.incremental_steps;
  res.stages.push_back(std::move(st));
  return res;
}

}  // namespace softpen

#endif
