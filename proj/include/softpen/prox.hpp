#ifndef SOFTPEN_PROX_HPP
#define SOFTPEN_PROX_HPP

#include <cmath>

#include "softpen/penalty.hpp"

namespace softpen {

// Scaled proximal operator argmin psi(x) + (1/2a)||x - x_bar||^2, closed form
// for every supported psi kind.
inline Vector prox(const ProximalTerm &psi, const Vector &x_bar,
                   double alpha) {
  if (!(alpha > 0.0)) throw invalid_params("prox: alpha > 0 required");
  switch (psi.kind) {
    case ProximalTerm::Kind::Zero:
      return x_bar;
    case ProximalTerm::Kind::SquaredNorm:
      return x_bar / (1.0 + alpha * psi.weight);
    case ProximalTerm::Kind::Box:
      return x_bar.cwiseMax(psi.lower).cwiseMin(psi.upper);
  }
  throw unsupported_prox("unknown proximal kind");
}

struct MappingResult {
  Vector x_tilde;  // prox-forward point
  Vector g;        // (x_bar - x_tilde) / alpha
  double g_norm;
  double alpha;
};

// Generalized gradient mapping of F_{S,xi,delta} at x_bar; with psi = 0 the
// mapping equals the penalty full gradient.
inline MappingResult gradient_mapping(const ConstrainedProblem &p,
                                      const PenaltyParams &params,
                                      const Vector &x_bar, double alpha,
                                      const IndexSet &subset) {
  MappingResult r;
  r.alpha = alpha;
  const Vector grad = penalty_full_gradient(p, params, x_bar, subset);
  r.x_tilde = prox(p.prox, x_bar - alpha * grad, alpha);
  // With psi = 0 the mapping equals the gradient exactly; the difference
  // quotient would cancel to 0 for tiny alpha.
  r.g = p.prox.is_zero() ? grad : Vector((x_bar - r.x_tilde) / alpha);
  r.g_norm = r.g.norm();
  return r;
}

inline MappingResult gradient_mapping(const ConstrainedProblem &p,
                                      const PenaltyParams &params,
                                      const Vector &x_bar, double alpha) {
  return gradient_mapping(p, params, x_bar, alpha,
                          full_index_set(p.num_constraints()));
}

struct SandwichCheck {
  bool upper_ok;
  bool lower_ok;
};

// Checks ||g||^2 <= (2/a)(F(x_bar) - F*) and ||g||^2 >= 2 mu (F(x_tilde) - F*)
// for a trusted optimum value f_star; requires alpha <= 1/(2 L_full).
inline SandwichCheck sandwich_check(const ConstrainedProblem &p,
                                   const PenaltyParams &params,
                                   const Vector &x_bar, double alpha,
                                   double f_star,
                                   const IndexSet &subset) {
  const double full_L = smoothness_bundle(p, params).full_L;
  if (alpha > 1.0 / (2.0 * full_L) * (1.0 + 1e-12))
    throw step_too_large("sandwich_check: alpha > 1/(2 L)");
  const MappingResult m = gradient_mapping(p, params, x_bar, alpha, subset);
  const double tol = 1e-8 * (1.0 + std::abs(f_star));
  const double g2 = m.g_norm * m.g_norm;
  const double f_bar = penalty_objective(p, params, x_bar, subset);
  const double f_tilde = penalty_objective(p, params, m.x_tilde, subset);
  const double mu = p.objective->strong_convexity();
  return {g2 <= 2.0 / alpha * (f_bar - f_star) + tol,
          g2 >= 2.0 * mu * (f_tilde - f_star) - tol};
}

inline SandwichCheck sandwich_check(const ConstrainedProblem &p,
                                   const PenaltyParams &params,
                                   const Vector &x_bar, double alpha,
                                   double f_star) {
  return sandwich_check(p, params, x_bar, alpha, f_star,
                       full_index_set(p.num_constraints()));
}

}  // namespace softpen

#endif
