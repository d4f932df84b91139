#ifndef SOFTPEN_DUALITY_HPP
#define SOFTPEN_DUALITY_HPP

#include <algorithm>

#include <Eigen/Cholesky>

#include "softpen/prox.hpp"

namespace softpen {

// Evaluates F*(v) = sup_x { v^T x - F(x) } (F includes psi) and the
// maximizing x. Quadratic objectives with zero / squared-norm psi use one
// cached factorization; everything else runs an accelerated inner
// minimization to tolerance 1e-10 (1 + ||v||).
class ConjugateOracle {
 public:
  enum class Method { closed_form_quadratic, inner_minimization };

  struct Result {
    double f_star;
    Vector x;
  };

  explicit ConjugateOracle(const ConstrainedProblem &p) : p_(p) {
    Matrix H;
    Vector c;
    const bool quad = p.objective->quadratic_form(&H, &c);
    const bool prox_ok = p.prox.kind == ProximalTerm::Kind::Zero ||
                         p.prox.kind == ProximalTerm::Kind::SquaredNorm;
    if (quad && prox_ok) {
      method_ = Method::closed_form_quadratic;
      if (p.prox.kind == ProximalTerm::Kind::SquaredNorm)
        H.diagonal().array() += p.prox.weight;
      llt_.compute(H);
      if (llt_.info() != Eigen::Success)
        throw conjugate_failure("hessian factorization failed");
      c_ = std::move(c);
    } else {
      method_ = Method::inner_minimization;
    }
  }

  Method method() const { return method_; }

  Result evaluate(const Vector &v) const {
    Vector x = method_ == Method::closed_form_quadratic ? solve_closed(v)
                                                        : solve_iterative(v);
    return {v.dot(x) - objective_value(p_, x), std::move(x)};
  }

 private:
  Vector solve_closed(const Vector &v) const { return llt_.solve(v - c_); }

  Vector solve_iterative(const Vector &v) const {
    // FISTA on F(x) + psi(x) - v^T x with strong-convexity momentum.
    const double L = p_.objective->lipschitz();
    const double mu = p_.objective->strong_convexity();
    const double alpha = 1.0 / L;
    const double sk = std::sqrt(L / mu);
    const double beta = (sk - 1.0) / (sk + 1.0);
    const double tol = 1e-10 * (1.0 + v.norm());
    Vector x = Vector::Zero(p_.dim()), x_prev = x, y(p_.dim());
    for (long it = 0; it < 200000; ++it) {
      y = x + beta * (x - x_prev);
      Vector grad = full_gradient_smooth(p_, y) - v;
      Vector x_next = prox(p_.prox, y - alpha * grad, alpha);
      const double g_norm = (y - x_next).norm() / alpha;
      if (grad.dot(x_next - x) > 0.0)
        x_prev = x_next;
      else
        x_prev = x;
      x = std::move(x_next);
      if (g_norm <= tol) return x;
    }
    throw conjugate_failure("conjugate inner minimization missed tolerance");
  }

  const ConstrainedProblem &p_;
  Method method_ = Method::inner_minimization;
  Eigen::LLT<Matrix> llt_;
  Vector c_;
};

// lambda_i = xi * sigmoid((a_i^T x - b_i)/delta) on S_hat, 0 elsewhere;
// always inside [0, xi]^m.
inline Vector recover_dual(const Vector &x, const IndexSet &S_hat,
                           const PenaltyParams &params,
                           const LinearConstraints &constraints) {
  if (!(params.delta > 0.0)) throw delta_zero_error();
  Vector lambda = Vector::Zero(constraints.rows());
  for (int i : S_hat) {
    const double slack = constraints.row_dot(i, x) - constraints.b()[i];
    lambda[i] = std::clamp(
        params.xi * softplus_deriv(slack, params.delta), 0.0, params.xi);
  }
  return lambda;
}

// pi_xi(lambda) = sum l log l + sum (xi-l) log(xi-l) - m xi log xi, with
// 0 log 0 = 0; lives in [-m xi log 2, 0].
inline double negentropy(const Vector &lambda, double xi) {
  if (!(xi > 0.0)) throw invalid_params("negentropy: xi > 0 required");
  double s = 0.0;
  for (int i = 0; i < lambda.size(); ++i) {
    const double l = lambda[i];
    if (l < 0.0 || l > xi) throw out_of_box("negentropy: lambda outside [0,xi]");
    if (l > 0.0) s += l * std::log(l);
    const double r = xi - l;
    if (r > 0.0) s += r * std::log(r);
  }
  return s - lambda.size() * xi * std::log(xi);
}

// G(lambda) = -F*(-A^T lambda) - b^T lambda
inline double dual_value(const ConstrainedProblem &p, const Vector &lambda,
                         const ConjugateOracle &conj) {
  const Vector v = -p.constraints.multiply_transpose(lambda);
  return -conj.evaluate(v).f_star - p.constraints.b().dot(lambda);
}

// G_{xi,delta}(lambda) = G(lambda) - delta * pi_xi(lambda)
inline double smoothed_dual_value(const ConstrainedProblem &p,
                                  const Vector &lambda,
                                  const PenaltyParams &params,
                                  const ConjugateOracle &conj) {
  return dual_value(p, lambda, conj) -
         params.delta * negentropy(lambda, params.xi);
}

struct DualCertificate {
  Vector lambda_hat;
  double dual_value;
  double primal_value;  // F_{xi,0}(x), exact hinge over the full set
  double gap;
};

inline DualCertificate duality_gap(const ConstrainedProblem &p,
                                   const Vector &x,
                                   const PenaltyParams &params,
                                   const IndexSet &S_hat,
                                   const ConjugateOracle &conj) {
  if (!x.allFinite()) throw non_finite_iterate("duality_gap: x not finite");
  DualCertificate cert;
  cert.lambda_hat = recover_dual(x, S_hat, params, p.constraints);
  cert.dual_value = dual_value(p, cert.lambda_hat, conj);
  const PenaltyParams exact(params.xi, 0.0);
  cert.primal_value = penalty_objective(p, exact, x);
  cert.gap = cert.primal_value - cert.dual_value;
  return cert;
}

}  // namespace softpen

#endif
