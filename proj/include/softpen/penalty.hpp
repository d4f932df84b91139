#ifndef SOFTPEN_PENALTY_HPP
#define SOFTPEN_PENALTY_HPP

#include <cmath>
#include <random>
#include <vector>

#include "softpen/problem.hpp"

namespace softpen {

// Smoothed hinge p_delta(t) = delta * log(1 + exp(t/delta)); p_0 = max(0,t).
// Evaluated as max(t,0) + delta*log1p(exp(-|t|/delta)); the naive form
// overflows once t/delta > 709.
inline double softplus(double t, double delta) {
  if (delta < 0.0) throw invalid_params("softplus: delta >= 0 required");
  if (delta == 0.0) return std::max(t, 0.0);
  return std::max(t, 0.0) + delta * std::log1p(std::exp(-std::abs(t) / delta));
}

// p'_delta(t) = sigmoid(t/delta), branchwise on sign(t) for stability.
inline double softplus_deriv(double t, double delta) {
  if (!(delta > 0.0)) throw delta_zero_error();
  const double z = t / delta;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// One penalty reformulation F_{xi,delta}; delta = 0 is the exact hinge
// (values only, gradient oracles refuse it).
struct PenaltyParams {
  double xi = 0.0;
  double delta = 0.0;

  PenaltyParams() = default;
  PenaltyParams(double xi_, double delta_) : xi(xi_), delta(delta_) {
    if (!(xi >= 0.0) || !(delta >= 0.0) || !std::isfinite(xi) ||
        !std::isfinite(delta))
      throw invalid_params("penalty params must be finite and nonnegative");
  }
};

using IndexSet = std::vector<int>;  // sorted surviving constraint indices

inline IndexSet full_index_set(int m) {
  IndexSet s(m);
  for (int i = 0; i < m; ++i) s[i] = i;
  return s;
}

// Smoothness constants of F_{xi,delta} and its components under the
// (ell+m)-component splitting.
struct SmoothnessBundle {
  double full_L;          // L + xi * s_max^2 / (4 delta)
  double component_L_obj;  // (ell+m) L / ell
  double component_L_pen;  // (ell+m) xi / (4 delta)
};

inline SmoothnessBundle smoothness_bundle(const ConstrainedProblem &p,
                                          const PenaltyParams &params,
                                          int m_hat = -1) {
  if (!(params.delta > 0.0)) throw delta_zero_error();
  const int m = m_hat >= 0 ? m_hat : p.num_constraints();
  const double ell = p.ell();
  const double s_max = m > 0 ? spectral(p).s_max : 0.0;
  SmoothnessBundle b;
  b.full_L = p.objective->lipschitz() +
             params.xi * s_max * s_max / (4.0 * params.delta);
  b.component_L_obj = (ell + m) * p.objective->lipschitz() / ell;
  b.component_L_pen = (ell + m) * params.xi / (4.0 * params.delta);
  return b;
}

// xi * sum_{i in subset} p_delta(a_i^T x - b_i)
inline double penalty_value(const ConstrainedProblem &p,
                            const PenaltyParams &params, const Vector &x,
                            const IndexSet &subset) {
  double s = 0.0;
  for (int i : subset)
    s += softplus(p.constraints.row_dot(i, x) - p.constraints.b()[i],
                  params.delta);
  return params.xi * s;
}

inline double penalty_value(const ConstrainedProblem &p,
                            const PenaltyParams &params, const Vector &x) {
  return penalty_value(p, params, x, full_index_set(p.num_constraints()));
}

// F_{S,xi,delta}(x) = F(x) + penalty
inline double penalty_objective(const ConstrainedProblem &p,
                                const PenaltyParams &params, const Vector &x,
                                const IndexSet &subset) {
  return objective_value(p, x) + penalty_value(p, params, x, subset);
}

inline double penalty_objective(const ConstrainedProblem &p,
                                const PenaltyParams &params, const Vector &x) {
  return penalty_objective(p, params, x, full_index_set(p.num_constraints()));
}

// Gradient of the smooth part of F_{S,xi,delta} (excludes psi).
inline Vector penalty_full_gradient(const ConstrainedProblem &p,
                                    const PenaltyParams &params,
                                    const Vector &x, const IndexSet &subset) {
  if (!(params.delta > 0.0)) throw delta_zero_error();
  Vector g = full_gradient_smooth(p, x);
  for (int i : subset) {
    const double slack =
        p.constraints.row_dot(i, x) - p.constraints.b()[i];
    const double coef = params.xi * softplus_deriv(slack, params.delta);
    p.constraints.add_scaled_row(i, coef, g);
  }
  return g;
}

inline Vector penalty_full_gradient(const ConstrainedProblem &p,
                                    const PenaltyParams &params,
                                    const Vector &x) {
  return penalty_full_gradient(p, params, x,
                               full_index_set(p.num_constraints()));
}

// Uniform sample over the ell + |subset| scaled components; expectation of
// the returned gradient equals penalty_full_gradient.
struct ComponentSample {
  int index;  // in [0, ell + |subset|)
  bool is_penalty;
};

inline ComponentSample sample_component(const ConstrainedProblem &p,
                                        const IndexSet &subset,
                                        std::mt19937_64 &rng) {
  const int total = p.ell() + static_cast<int>(subset.size());
  std::uniform_int_distribution<int> dist(0, total - 1);
  const int idx = dist(rng);
  return {idx, idx >= p.ell()};
}

// g += gradient of the sampled scaled component at x:
//   (ell+m)/ell * grad f_i           for objective components,
//   (ell+m) * xi * sigmoid(.) * a_j  for penalty components.
inline void add_component_gradient(const ConstrainedProblem &p,
                                   const PenaltyParams &params,
                                   const IndexSet &subset,
                                   const ComponentSample &s, const Vector &x,
                                   double scale, Vector &g, Vector &scratch) {
  if (!(params.delta > 0.0)) throw delta_zero_error();
  const int total = p.ell() + static_cast<int>(subset.size());
  if (!s.is_penalty) {
    p.objective->component_gradient(s.index, x, scratch);
    g.noalias() +=
        (scale * static_cast<double>(total) / p.ell()) * scratch;
  } else {
    const int ci = subset[s.index - p.ell()];
    const double slack =
        p.constraints.row_dot(ci, x) - p.constraints.b()[ci];
    const double coef = scale * static_cast<double>(total) * params.xi *
                        softplus_deriv(slack, params.delta);
    p.constraints.add_scaled_row(ci, coef, g);
  }
}

// --- closed-form distance / residual bounds --------------------------------

struct DistanceBound {
  double bound;
  int active_claim;  // 1, 2, or 3
};

// Upper bound on ||x*_{xi,delta} - x*_{xi,0}||_2: the tightest of the three
// claims that are valid at (xi, delta).
inline DistanceBound distance_bound(const PenaltyParams &params, double mu,
                                    int m, const SpectralInfo &spectral) {
  if (!(params.xi > 0.0)) throw invalid_params("distance_bound: xi > 0");
  const double xi = params.xi, delta = params.delta;
  if (delta == 0.0) return {0.0, 1};
  DistanceBound best{std::sqrt(2.0 * m * xi * delta * std::log(2.0) / mu), 1};
  if (delta <= (xi / mu) * std::exp(-2.0)) {
    const double v = m * delta * std::log(xi / (mu * delta));
    if (v < best.bound) best = {v, 2};
  }
  const double c3 = spectral.s_max * std::max(spectral.s_pmin, 1.0) * xi / mu;
  if (delta <= c3 * std::exp(-1.0)) {
    const double v = (4.0 * std::sqrt(static_cast<double>(m)) /
                      spectral.s_pmin) *
                     delta * std::log(c3 / delta);
    if (v < best.bound) best = {v, 3};
  }
  return best;
}

// sqrt(m) delta log(s_max^2 xi/(mu delta)); bounds the constraint violation
// at x*_{xi,delta} once xi >= xi_bar.
inline double residual_bound(const PenaltyParams &params, double mu, int m,
                             const SpectralInfo &spectral) {
  const double xi = params.xi, delta = params.delta;
  const double c = spectral.s_max * spectral.s_max * xi / mu;
  if (!(delta > 0.0) || delta > c * std::exp(-2.0))
    throw out_of_validity_range("residual_bound: need 0 < delta <= s_max^2 xi/mu * e^-2");
  return std::sqrt(static_cast<double>(m)) * delta * std::log(c / delta);
}

}  // namespace softpen

#endif
