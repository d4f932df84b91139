#ifndef SOFTPEN_QP_GEN_HPP
#define SOFTPEN_QP_GEN_HPP

#include <cstdint>
#include <random>

#include "softpen/problem.hpp"

namespace softpen {

struct QpSpec {
  int ell = 100;
  int m = 100;
  int n = 100;
  double w = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (ell < 1 || m < 1 || n < 1 || !(w > 0.0))
      throw invalid_params("qp spec: dimensions >= 1, w > 0");
  }
};

// Ridge least squares with random unit-row constraints; b = |b0| keeps x = 0
// feasible. Deterministic per seed.
inline ConstrainedProblem generate_qp(const QpSpec &spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  RowMatrix phi(spec.ell, spec.n);
  for (int i = 0; i < spec.ell; ++i)
    for (int j = 0; j < spec.n; ++j) phi(i, j) = normal(rng);
  Vector y(spec.ell);
  for (int i = 0; i < spec.ell; ++i) y[i] = normal(rng);

  Matrix a_raw(spec.m, spec.n);
  for (int i = 0; i < spec.m; ++i)
    for (int j = 0; j < spec.n; ++j) a_raw(i, j) = normal(rng);
  Vector b(spec.m);
  for (int i = 0; i < spec.m; ++i) b[i] = std::abs(normal(rng));

  ConstrainedProblem p;
  p.objective =
      std::make_shared<QuadraticSum>(std::move(phi), std::move(y), spec.w);
  p.prox = ProximalTerm::zero();
  p.constraints = LinearConstraints::normalize_rows(a_raw, b);
  return p;
}

}  // namespace softpen

#endif
