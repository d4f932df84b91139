#ifndef SOFTPEN_SOLVERS_HPP
#define SOFTPEN_SOLVERS_HPP

#include <functional>
#include <optional>
#include <random>

#include "softpen/prox.hpp"

namespace softpen {

enum class SolverKind { sgd, sgdm, svrg, accel_full };

struct SolverConfig {
  SolverKind kind = SolverKind::sgd;
  double step_size = 0.0;        // sgd/sgdm/svrg; accel_full uses 1/full_L
  double momentum_alpha = 0.0;   // sgdm, in [0,1)
  long anchor_period = 0;        // svrg, stochastic steps; 0 = 5*(ell+m_hat)
  long budget = 1;               // max incremental steps
  long check_period = 0;         // steps between stopping checks; 0 = none
  double target_gmap_norm = 0.0;
};

enum class StopReason { gmap_target, budget, stall };

struct InnerResult {
  Vector x_hat;
  long incremental_steps = 0;
  StopReason stop_reason = StopReason::budget;
  std::optional<double> final_gmap_norm;
  // instrumented counters; incremental_steps =
  //   stochastic_steps + (ell+m_hat)*full_gradient_evals + prox_evals
  long stochastic_steps = 0;
  long full_gradient_evals = 0;
  long prox_evals = 0;
};

// Fires a callback whenever the global incremental-step count crosses a
// multiple of `period` (trace checkpoints).
struct StepTracker {
  long global_offset = 0;
  long period = 0;
  std::function<void(long, const Vector &)> on_checkpoint;
  long next_ = 0;

  void reset() {
    next_ = period > 0 ? (global_offset / period + 1) * period : 0;
  }
  void advance(long local_steps, const Vector &x) {
    if (period <= 0 || !on_checkpoint) return;
    const long g = global_offset + local_steps;
    if (g >= next_) {
      on_checkpoint(g, x);
      next_ = (g / period + 1) * period;
    }
  }
};

namespace detail {

inline void check_finite(const Vector &x) {
  if (!x.allFinite())
    throw non_finite_iterate("iterate left the finite range (step too large?)");
}

// Shared stopping logic: gradient-mapping check at checkpoints plus the
// 5-checkpoint stall guard.
class StopMonitor {
 public:
  StopMonitor(const ConstrainedProblem &p, const PenaltyParams &params,
              const IndexSet &subset, const SolverConfig &cfg, double alpha)
      : p_(p), params_(params), subset_(subset), cfg_(cfg), alpha_(alpha) {}

  // Full gradient-mapping evaluation; caller accounts for its cost.
  bool target_reached(const Vector &x, InnerResult &res) {
    const MappingResult m =
        gradient_mapping(p_, params_, x, alpha_, subset_);
    res.final_gmap_norm = m.g_norm;
    if (m.g_norm <= cfg_.target_gmap_norm) return true;
    if (m.g_norm >= best_ * (1.0 - 1e-12)) {
      if (++no_progress_ >= 5) {
        stalled_ = true;
        return true;
      }
    } else {
      no_progress_ = 0;
      best_ = m.g_norm;
    }
    return false;
  }

  bool stalled() const { return stalled_; }

 private:
  const ConstrainedProblem &p_;
  const PenaltyParams &params_;
  const IndexSet &subset_;
  const SolverConfig &cfg_;
  double alpha_;
  double best_ = std::numeric_limits<double>::infinity();
  int no_progress_ = 0;
  bool stalled_ = false;
};

}  // namespace detail

// Proximal SGD over the ell+m_hat scaled components.
inline InnerResult sgd_solve(const ConstrainedProblem &p,
                             const PenaltyParams &params,
                             const IndexSet &subset, const Vector &x0,
                             const SolverConfig &cfg, std::mt19937_64 &rng,
                             StepTracker *tracker = nullptr) {
  const long full_cost = p.ell() + static_cast<long>(subset.size());
  const bool has_prox = !p.prox.is_zero();
  detail::StopMonitor monitor(p, params, subset, cfg, cfg.step_size);
  InnerResult res;
  res.x_hat = x0;
  Vector g(x0.size()), scratch(x0.size());
  if (tracker) tracker->reset();
  long since_check = 0;
  while (res.incremental_steps < cfg.budget) {
    const ComponentSample s = sample_component(p, subset, rng);
    g.setZero();
    add_component_gradient(p, params, subset, s, res.x_hat, 1.0, g, scratch);
    res.x_hat = prox(p.prox, res.x_hat - cfg.step_size * g, cfg.step_size);
    ++res.stochastic_steps;
    ++res.incremental_steps;
    if (has_prox) {
      ++res.prox_evals;
      ++res.incremental_steps;
    }
    if (tracker) tracker->advance(res.incremental_steps, res.x_hat);
    if (++since_check % 4096 == 0) detail::check_finite(res.x_hat);
    if (cfg.check_period > 0 && since_check >= cfg.check_period) {
      since_check = 0;
      ++res.full_gradient_evals;
      res.incremental_steps += full_cost;
      if (monitor.target_reached(res.x_hat, res)) {
        res.stop_reason =
            monitor.stalled() ? StopReason::stall : StopReason::gmap_target;
        return res;
      }
    }
  }
  res.stop_reason = StopReason::budget;
  detail::check_finite(res.x_hat);
  return res;
}

// SGD with Nesterov-style momentum:
//   v <- alpha v - t grad_phi_i(x + alpha v);  x <- x + v
// followed by the prox when psi is nonzero. With momentum_alpha = 0 the
// trajectory matches sgd_solve under the same RNG stream.
inline InnerResult sgdm_solve(const ConstrainedProblem &p,
                              const PenaltyParams &params,
                              const IndexSet &subset, const Vector &x0,
                              const SolverConfig &cfg, std::mt19937_64 &rng,
                              StepTracker *tracker = nullptr) {
  if (cfg.momentum_alpha < 0.0 || cfg.momentum_alpha >= 1.0)
    throw invalid_params("momentum_alpha must be in [0,1)");
  const long full_cost = p.ell() + static_cast<long>(subset.size());
  const bool has_prox = !p.prox.is_zero();
  detail::StopMonitor monitor(p, params, subset, cfg, cfg.step_size);
  InnerResult res;
  res.x_hat = x0;
  Vector v = Vector::Zero(x0.size());
  Vector g(x0.size()), scratch(x0.size()), lookahead(x0.size());
  if (tracker) tracker->reset();
  long since_check = 0;
  while (res.incremental_steps < cfg.budget) {
    const ComponentSample s = sample_component(p, subset, rng);
    lookahead = res.x_hat + cfg.momentum_alpha * v;
    g.setZero();
    add_component_gradient(p, params, subset, s, lookahead, 1.0, g, scratch);
    v = cfg.momentum_alpha * v - cfg.step_size * g;
    res.x_hat += v;
    ++res.stochastic_steps;
    ++res.incremental_steps;
    if (has_prox) {
      res.x_hat = prox(p.prox, res.x_hat, cfg.step_size);
      ++res.prox_evals;
      ++res.incremental_steps;
    }
    if (tracker) tracker->advance(res.incremental_steps, res.x_hat);
    if (++since_check % 4096 == 0) detail::check_finite(res.x_hat);
    if (cfg.check_period > 0 && since_check >= cfg.check_period) {
      since_check = 0;
      ++res.full_gradient_evals;
      res.incremental_steps += full_cost;
      if (monitor.target_reached(res.x_hat, res)) {
        res.stop_reason =
            monitor.stalled() ? StopReason::stall : StopReason::gmap_target;
        return res;
      }
    }
  }
  res.stop_reason = StopReason::budget;
  detail::check_finite(res.x_hat);
  return res;
}

// Proximal SVRG. Component gradients are cached during the anchor pass, so a
// stochastic step costs one incremental step and an anchor costs ell+m_hat.
inline InnerResult svrg_solve(const ConstrainedProblem &p,
                              const PenaltyParams &params,
                              const IndexSet &subset, const Vector &x0,
                              const SolverConfig &cfg, std::mt19937_64 &rng,
                              StepTracker *tracker = nullptr) {
  const int total = p.ell() + static_cast<int>(subset.size());
  const long anchor_period =
      cfg.anchor_period > 0 ? cfg.anchor_period : 5L * total;
  const bool has_prox = !p.prox.is_zero();
  detail::StopMonitor monitor(p, params, subset, cfg, cfg.step_size);
  InnerResult res;
  res.x_hat = x0;
  Matrix cache(total, x0.size());
  Vector anchor_mean(x0.size());
  Vector g(x0.size()), scratch(x0.size());
  if (tracker) tracker->reset();
  long since_anchor = anchor_period;  // force an anchor first
  while (res.incremental_steps < cfg.budget) {
    if (since_anchor >= anchor_period) {
      since_anchor = 0;
      anchor_mean.setZero();
      for (int i = 0; i < total; ++i) {
        g.setZero();
        const ComponentSample s{i, i >= p.ell()};
        add_component_gradient(p, params, subset, s, res.x_hat, 1.0, g,
                               scratch);
        cache.row(i) = g.transpose();
        anchor_mean += g;
      }
      anchor_mean /= static_cast<double>(total);
      ++res.full_gradient_evals;
      res.incremental_steps += total;
      detail::check_finite(res.x_hat);
      // anchor doubles as the stopping checkpoint
      if (cfg.check_period > 0) {
        const Vector x_tilde = prox(
            p.prox, res.x_hat - cfg.step_size * anchor_mean, cfg.step_size);
        const double g_norm = (res.x_hat - x_tilde).norm() / cfg.step_size;
        res.final_gmap_norm = g_norm;
        if (g_norm <= cfg.target_gmap_norm) {
          res.stop_reason = StopReason::gmap_target;
          return res;
        }
        if (monitor.target_reached(res.x_hat, res)) {
          res.stop_reason =
              monitor.stalled() ? StopReason::stall : StopReason::gmap_target;
          return res;
        }
      }
    }
    const ComponentSample s = sample_component(p, subset, rng);
    g = anchor_mean;
    g.noalias() -= cache.row(s.index).transpose();
    add_component_gradient(p, params, subset, s, res.x_hat, 1.0, g, scratch);
    res.x_hat = prox(p.prox, res.x_hat - cfg.step_size * g, cfg.step_size);
    ++res.stochastic_steps;
    ++res.incremental_steps;
    ++since_anchor;
    if (has_prox) {
      ++res.prox_evals;
      ++res.incremental_steps;
    }
    if (tracker) tracker->advance(res.incremental_steps, res.x_hat);
  }
  res.stop_reason = StopReason::budget;
  detail::check_finite(res.x_hat);
  return res;
}

// Accelerated proximal full-gradient method with the strong-convexity
// momentum coefficient (sqrt(k)-1)/(sqrt(k)+1) and gradient-based restart.
// Deterministic given x0.
inline InnerResult accel_full_solve(const ConstrainedProblem &p,
                                    const PenaltyParams &params,
                                    const IndexSet &subset, const Vector &x0,
                                    const SolverConfig &cfg,
                                    StepTracker *tracker = nullptr) {
  const long full_cost = p.ell() + static_cast<long>(subset.size());
  const bool has_prox = !p.prox.is_zero();
  const SmoothnessBundle bundle =
      smoothness_bundle(p, params, static_cast<int>(subset.size()));
  const double alpha = 1.0 / bundle.full_L;
  const double kappa = bundle.full_L / p.objective->strong_convexity();
  const double beta =
      (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
  detail::StopMonitor monitor(p, params, subset, cfg, alpha);
  InnerResult res;
  res.x_hat = x0;
  Vector x_prev = x0;
  Vector y(x0.size()), grad(x0.size()), x_next(x0.size());
  if (tracker) tracker->reset();
  while (res.incremental_steps < cfg.budget) {
    y = res.x_hat + beta * (res.x_hat - x_prev);
    grad = penalty_full_gradient(p, params, y, subset);
    x_next = prox(p.prox, y - alpha * grad, alpha);
    ++res.full_gradient_evals;
    res.incremental_steps += full_cost;
    if (has_prox) {
      ++res.prox_evals;
      ++res.incremental_steps;
    }
    const double g_norm = (y - x_next).norm() / alpha;
    res.final_gmap_norm = g_norm;
    // restart when the gradient opposes the momentum direction
    if (grad.dot(x_next - res.x_hat) > 0.0)
      x_prev = x_next;
    else
      x_prev = res.x_hat;
    res.x_hat = x_next;
    if (tracker) tracker->advance(res.incremental_steps, res.x_hat);
    detail::check_finite(res.x_hat);
    if (g_norm <= cfg.target_gmap_norm) {
      res.stop_reason = StopReason::gmap_target;
      return res;
    }
    if (monitor.stalled()) break;
  }
  res.stop_reason = StopReason::budget;
  return res;
}

// Dispatch on cfg.kind.
inline InnerResult inner_solve(const ConstrainedProblem &p,
                               const PenaltyParams &params,
                               const IndexSet &subset, const Vector &x0,
                               const SolverConfig &cfg, std::mt19937_64 &rng,
                               StepTracker *tracker = nullptr) {
  switch (cfg.kind) {
    case SolverKind::sgd:
      return sgd_solve(p, params, subset, x0, cfg, rng, tracker);
    case SolverKind::sgdm:
      return sgdm_solve(p, params, subset, x0, cfg, rng, tracker);
    case SolverKind::svrg:
      return svrg_solve(p, params, subset, x0, cfg, rng, tracker);
    case SolverKind::accel_full:
      return accel_full_solve(p, params, subset, x0, cfg, tracker);
  }
  throw invalid_params("unknown solver kind");
}

}  // namespace softpen

#endif
