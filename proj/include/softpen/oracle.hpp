#ifndef SOFTPEN_ORACLE_HPP
#define SOFTPEN_ORACLE_HPP

#include "softpen/duality.hpp"
#include "softpen/solvers.hpp"

namespace softpen {

struct KktResidual {
  double stationarity;    // prox-mapping residual of F + psi + lambda^T A
  double primal_infeas;   // ||(Ax - b)^+||_2
  double dual_infeas;     // ||(-lambda)^+||_2
  double complementarity; // ||lambda .* (Ax - b)||_2

  double max() const {
    return std::max({stationarity, primal_infeas, dual_infeas,
                     complementarity});
  }
};

inline KktResidual kkt_residual(const ConstrainedProblem &p, const Vector &x,
                                const Vector &lambda) {
  KktResidual r{};
  const double alpha = 1.0 / p.objective->lipschitz();
  Vector g = full_gradient_smooth(p, x);
  g += p.constraints.multiply_transpose(lambda);
  r.stationarity = (x - prox(p.prox, x - alpha * g, alpha)).norm() / alpha;
  const Vector slack = p.constraints.multiply(x) - p.constraints.b();
  r.primal_infeas = slack.cwiseMax(0.0).norm();
  r.dual_infeas = (-lambda).cwiseMax(0.0).norm();
  r.complementarity = lambda.cwiseProduct(slack).norm();
  return r;
}

struct ReferenceSolution {
  Vector x_star;
  Vector lambda_star;
  IndexSet active_set;     // |a_i^T x* - b_i| <= activity_tol
  double varsigma;         // min slack over inactive constraints
  double lambda_inf_norm;
  KktResidual kkt;
  long iterations = 0;
};

struct OracleOptions {
  long max_iterations = 1000000;
  double activity_tol = -1.0;  // <0: 1e-7 * (1 + ||b||_inf)
  double lambda_upper = std::numeric_limits<double>::infinity();  // dual box
};

// Projected accelerated ascent on the dual G(lambda) over the box
// [0, lambda_upper]^m; each gradient is A x(lambda) - b with x(lambda) from
// the conjugate oracle. Deterministic.
inline ReferenceSolution solve_reference(const ConstrainedProblem &p,
                                         double tol,
                                         const OracleOptions &opts = {}) {
  if (!(tol >= 1e-12)) throw invalid_params("solve_reference: tol >= 1e-12");
  const ConjugateOracle conj(p);
  const int m = p.num_constraints();
  const double s_max = spectral(p).s_max;
  const double mu = p.objective->strong_convexity();
  const double step = mu / (s_max * s_max);

  auto project = [&](Vector &l) {
    for (int i = 0; i < m; ++i)
      l[i] = std::clamp(l[i], 0.0, opts.lambda_upper);
  };
  auto dual_grad = [&](const Vector &l, Vector *x_out) {
    const Vector v = -p.constraints.multiply_transpose(l);
    Vector x = conj.evaluate(v).x;
    Vector g = p.constraints.multiply(x) - p.constraints.b();
    if (x_out) *x_out = std::move(x);
    return g;
  };

  Vector lam = Vector::Zero(m), lam_prev = lam, y(m);
  double t_k = 1.0;
  ReferenceSolution sol;
  for (long it = 1; it <= opts.max_iterations; ++it) {
    y = lam + (t_k - 1.0) / ((1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0) *
                  (lam - lam_prev);
    project(y);
    const Vector g = dual_grad(y, nullptr);
    Vector lam_next = y + step * g;
    project(lam_next);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k)) / 2.0;
    // restart when the ascent direction opposes the momentum
    if (g.dot(lam_next - lam) < 0.0)
      t_k = 1.0;
    else
      t_k = t_next;
    lam_prev = lam;
    lam = std::move(lam_next);
    sol.iterations = it;
    if (it % 10 == 0 || it == opts.max_iterations) {
      Vector x;
      dual_grad(lam, &x);
      const KktResidual r = kkt_residual(p, x, lam);
      bool done;
      if (std::isfinite(opts.lambda_upper)) {
        // capped multipliers: complementarity need not vanish, certify by
        // the exact-hinge primal-dual gap instead
        const PenaltyParams exact(opts.lambda_upper, 0.0);
        const double primal = penalty_objective(p, exact, x);
        const double dual = dual_value(p, lam, conj);
        done = primal - dual <= tol &&
               std::max(r.stationarity, r.dual_infeas) <= tol;
      } else {
        done = r.max() <= tol;
      }
      if (done) {
        sol.x_star = std::move(x);
        sol.lambda_star = lam;
        sol.kkt = r;
        break;
      }
      if (it == opts.max_iterations)
        throw tolerance_not_reached("solve_reference: iteration cap hit");
    }
  }

  const double activity_tol =
      opts.activity_tol >= 0.0
          ? opts.activity_tol
          : 1e-7 * (1.0 + p.constraints.b().cwiseAbs().maxCoeff());
  sol.varsigma = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double slack =
        p.constraints.b()[i] - p.constraints.row_dot(i, sol.x_star);
    if (std::abs(slack) <= activity_tol)
      sol.active_set.push_back(i);
    else if (slack > 0.0)
      sol.varsigma = std::min(sol.varsigma, slack);
  }
  sol.lambda_inf_norm =
      m > 0 ? sol.lambda_star.cwiseAbs().maxCoeff() : 0.0;
  return sol;
}

// High-accuracy minimizer of F_{xi,delta}: deterministic accelerated
// full-gradient run to gradient-mapping norm sqrt(2 mu tol), giving objective
// gap <= tol. delta = 0 falls back to the exact-hinge reference, i.e. the
// dual solve over the box [0, xi]^m.
inline Vector penalty_reference(const ConstrainedProblem &p,
                                const PenaltyParams &params, double tol) {
  if (params.delta == 0.0) {
    OracleOptions opts;
    opts.lambda_upper = params.xi;
    return solve_reference(p, tol, opts).x_star;
  }
  const double mu = p.objective->strong_convexity();
  SolverConfig cfg;
  cfg.kind = SolverKind::accel_full;
  cfg.target_gmap_norm = std::sqrt(2.0 * mu * tol);
  const long per_iter = p.ell() + p.num_constraints();
  cfg.budget = 4000000L * per_iter;
  std::mt19937_64 rng(0);
  const InnerResult res =
      inner_solve(p, params, full_index_set(p.num_constraints()),
                  Vector::Zero(p.dim()), cfg, rng);
  if (res.stop_reason != StopReason::gmap_target)
    throw tolerance_not_reached("penalty_reference: target not reached");
  return res.x_hat;
}

}  // namespace softpen

#endif
