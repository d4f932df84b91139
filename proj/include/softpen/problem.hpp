#ifndef SOFTPEN_PROBLEM_HPP
#define SOFTPEN_PROBLEM_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "softpen/errors.hpp"

namespace softpen {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Normalized linear inequality system A x <= b with unit-norm rows.
// Dense row-major by default; a row-sparse copy is used instead when the
// density of the input drops below 25% (SVM data).
class LinearConstraints {
 public:
  LinearConstraints() = default;

  static constexpr double kSparseDensityThreshold = 0.25;

  int rows() const { return m_; }
  int cols() const { return n_; }
  bool is_sparse() const { return sparse_.has_value(); }
  const Vector &b() const { return b_; }

  double row_dot(int i, const Vector &x) const {
    if (sparse_) {
      double s = 0.0;
      for (SparseRowMatrix::InnerIterator it(*sparse_, i); it; ++it)
        s += it.value() * x[it.col()];
      return s;
    }
    return dense_.row(i).dot(x);
  }

  // out += coef * a_i
  void add_scaled_row(int i, double coef, Vector &out) const {
    if (sparse_) {
      for (SparseRowMatrix::InnerIterator it(*sparse_, i); it; ++it)
        out[it.col()] += coef * it.value();
    } else {
      out.noalias() += coef * dense_.row(i).transpose();
    }
  }

  Vector multiply(const Vector &x) const {
    if (sparse_) return (*sparse_) * x;
    return dense_ * x;
  }

  Vector multiply_transpose(const Vector &y) const {
    if (sparse_) return sparse_->transpose() * y;
    return dense_.transpose() * y;
  }

  Matrix to_dense() const {
    if (sparse_) return Matrix(*sparse_);
    return dense_;
  }

  // Row-normalizes (A_raw, b_raw); the feasible set is unchanged.
  static LinearConstraints normalize_rows(const Matrix &a_raw,
                                          const Vector &b_raw) {
    LinearConstraints c;
    c.m_ = static_cast<int>(a_raw.rows());
    c.n_ = static_cast<int>(a_raw.cols());
    if (c.m_ < 1 || c.n_ < 1) throw invalid_params("constraints need m,n >= 1");
    if (!a_raw.allFinite() || !b_raw.allFinite())
      throw invalid_params("constraints contain NaN/Inf");
    RowMatrix a(c.m_, c.n_);
    c.b_.resize(c.m_);
    int nnz = 0;
    for (int i = 0; i < c.m_; ++i) {
      const double nrm = a_raw.row(i).norm();
      if (nrm < 1e-14) throw zero_row_error(i);
      a.row(i) = a_raw.row(i) / nrm;
      c.b_[i] = b_raw[i] / nrm;
      for (int j = 0; j < c.n_; ++j)
        if (a_raw(i, j) != 0.0) ++nnz;
    }
    const double density =
        static_cast<double>(nnz) / (static_cast<double>(c.m_) * c.n_);
    if (density < kSparseDensityThreshold) {
      c.sparse_.emplace(a.sparseView());
      c.sparse_->makeCompressed();
    } else {
      c.dense_ = std::move(a);
    }
    return c;
  }

 private:
  RowMatrix dense_;
  std::optional<SparseRowMatrix> sparse_;
  Vector b_;
  int m_ = 0;
  int n_ = 0;
};

// Largest / smallest positive singular values of the constraint matrix.
struct SpectralInfo {
  double s_max = 0.0;
  double s_pmin = 0.0;
};

// Finite sum (1/ell) sum f_i of smooth convex components with known
// per-component smoothness L and strong convexity mu of the full objective.
class SmoothSum {
 public:
  virtual ~SmoothSum() = default;

  int ell() const { return ell_; }
  double lipschitz() const { return L_; }
  double strong_convexity() const { return mu_; }

  virtual double component_value(int i, const Vector &x) const = 0;
  virtual void component_gradient(int i, const Vector &x, Vector &g) const = 0;

  // Quadratic structure 0.5 x^T H x + c^T x + const, when available
  // (enables the closed-form conjugate oracle).
  virtual bool quadratic_form(Matrix * /*hessian*/,
                              Vector * /*linear*/) const {
    return false;
  }

  double value(const Vector &x) const {
    double s = 0.0;
    for (int i = 0; i < ell_; ++i) s += component_value(i, x);
    return s / ell_;
  }

  void gradient(const Vector &x, Vector &g) const {
    g.setZero(x.size());
    Vector gi(x.size());
    for (int i = 0; i < ell_; ++i) {
      component_gradient(i, x, gi);
      g += gi;
    }
    g /= static_cast<double>(ell_);
  }

 protected:
  SmoothSum(int ell, double lipschitz, double mu)
      : ell_(ell), L_(lipschitz), mu_(mu) {
    if (ell < 1) throw invalid_params("ell >= 1 required");
    if (!(mu > 0.0) || lipschitz < mu)
      throw invalid_params("need L >= mu > 0");
  }

 private:
  int ell_;
  double L_;
  double mu_;
};

// Ridge least squares (1/(2 ell)) sum (phi_i^T x - y_i)^2 + (w/2)||x||^2,
// stored as components f_i = 0.5 (phi_i^T x - y_i)^2 + (w/2)||x||^2.
// With zero rows this degenerates to the plain (w/2)||x||^2 objective.
class QuadraticSum final : public SmoothSum {
 public:
  QuadraticSum(RowMatrix phi, Vector y, double w)
      : SmoothSum(static_cast<int>(phi.rows()),
                  max_row_sq_norm(phi) + w,
                  strong_convexity_of(phi, w)),
        phi_(std::move(phi)), y_(std::move(y)), w_(w) {}

  double component_value(int i, const Vector &x) const override {
    check_index(i);
    const double r = phi_.row(i).dot(x) - y_[i];
    return 0.5 * r * r + 0.5 * w_ * x.squaredNorm();
  }

  void component_gradient(int i, const Vector &x, Vector &g) const override {
    check_index(i);
    const double r = phi_.row(i).dot(x) - y_[i];
    g = w_ * x;
    g.noalias() += r * phi_.row(i).transpose();
  }

  bool quadratic_form(Matrix *hessian, Vector *linear) const override {
    const int n = static_cast<int>(phi_.cols());
    if (hessian) {
      *hessian = phi_.transpose() * phi_ / static_cast<double>(ell()) +
                 w_ * Matrix::Identity(n, n);
    }
    if (linear)
      *linear = -phi_.transpose() * y_ / static_cast<double>(ell());
    return true;
  }

  const RowMatrix &phi() const { return phi_; }
  double ridge_weight() const { return w_; }

 private:
  void check_index(int i) const {
    if (i < 0 || i >= ell()) throw index_out_of_range("component index");
  }

  static double max_row_sq_norm(const RowMatrix &phi) {
    double v = 0.0;
    for (int i = 0; i < phi.rows(); ++i)
      v = std::max(v, phi.row(i).squaredNorm());
    return v;
  }

  static double strong_convexity_of(const RowMatrix &phi, double w) {
    if (phi.rows() == 0 || phi.cols() == 0) return w;
    // exact mu = lambda_min(Phi^T Phi)/ell + w; cheap at desk scale
    const Matrix gram =
        phi.transpose() * phi / static_cast<double>(phi.rows());
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram,
                                             Eigen::EigenvaluesOnly);
    return std::max(0.0, es.eigenvalues().minCoeff()) + w;
  }

  RowMatrix phi_;
  Vector y_;
  double w_;
};

// Proximal term psi with a closed-form prox for every supported kind.
struct ProximalTerm {
  enum class Kind { Zero, SquaredNorm, Box };
  Kind kind = Kind::Zero;
  double weight = 0.0;  // SquaredNorm: (weight/2)||x||^2
  Vector lower, upper;  // Box bounds

  static ProximalTerm zero() { return {}; }
  static ProximalTerm squared_norm(double w) {
    ProximalTerm p;
    p.kind = Kind::SquaredNorm;
    p.weight = w;
    return p;
  }
  static ProximalTerm box(Vector lo, Vector hi) {
    ProximalTerm p;
    p.kind = Kind::Box;
    p.lower = std::move(lo);
    p.upper = std::move(hi);
    return p;
  }

  double value(const Vector &x) const {
    switch (kind) {
      case Kind::Zero:
        return 0.0;
      case Kind::SquaredNorm:
        return 0.5 * weight * x.squaredNorm();
      case Kind::Box:
        for (int i = 0; i < x.size(); ++i)
          if (x[i] < lower[i] - 1e-12 || x[i] > upper[i] + 1e-12)
            return std::numeric_limits<double>::infinity();
        return 0.0;
    }
    return 0.0;
  }

  bool is_zero() const { return kind == Kind::Zero; }
};

struct ConstrainedProblem {
  std::shared_ptr<const SmoothSum> objective;
  ProximalTerm prox;
  LinearConstraints constraints;
  mutable std::optional<SpectralInfo> spectral_cache;

  int dim() const { return constraints.cols(); }
  int num_constraints() const { return constraints.rows(); }
  int ell() const { return objective->ell(); }
};

// --- oracle evaluations -----------------------------------------------------

inline double objective_value(const ConstrainedProblem &p, const Vector &x) {
  return p.objective->value(x) + p.prox.value(x);
}

inline Vector full_gradient_smooth(const ConstrainedProblem &p,
                                   const Vector &x) {
  Vector g;
  p.objective->gradient(x, g);
  return g;
}

inline Vector component_gradient_smooth(const ConstrainedProblem &p, int i,
                                        const Vector &x) {
  Vector g(x.size());
  p.objective->component_gradient(i, x, g);
  return g;
}

struct Violation {
  double max_violation;
  double l2_violation;
};

inline Violation feasibility_violation(const ConstrainedProblem &p,
                                       const Vector &x) {
  Vector r = p.constraints.multiply(x) - p.constraints.b();
  double mx = 0.0, sq = 0.0;
  for (int i = 0; i < r.size(); ++i) {
    const double v = std::max(0.0, r[i]);
    mx = std::max(mx, v);
    sq += v * v;
  }
  return {mx, std::sqrt(sq)};
}

// --- spectral constants -----------------------------------------------------

namespace detail {

inline double power_iteration_smax(const Matrix &a, int max_iter,
                                   double tol) {
  const int n = static_cast<int>(a.cols());
  Vector v = Vector::Ones(n).normalized();
  double prev = 0.0;
  for (int k = 0; k < max_iter; ++k) {
    Vector w = a.transpose() * (a * v);
    const double lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
    if (k > 0 && std::abs(lam - prev) <= tol * lam) return std::sqrt(lam);
    prev = lam;
  }
  throw convergence_failure("power iteration for s_max did not converge");
}

}  // namespace detail

// Singular values below 1e-10 * s_max are treated as zero when picking the
// smallest positive one.
inline SpectralInfo spectral_constants(const LinearConstraints &constraints,
                                       int max_iter = 20000) {
  const Matrix a = constraints.to_dense();
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  SpectralInfo info;
  if (std::min(m, n) <= 512) {
    const Matrix gram = (m <= n) ? Matrix(a * a.transpose())
                                 : Matrix(a.transpose() * a);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const Vector ev = es.eigenvalues();
    info.s_max = std::sqrt(std::max(0.0, ev.maxCoeff()));
    const double cut = 1e-10 * info.s_max;
    info.s_pmin = info.s_max;
    for (int i = 0; i < ev.size(); ++i) {
      const double s = std::sqrt(std::max(0.0, ev[i]));
      if (s > cut) info.s_pmin = std::min(info.s_pmin, s);
    }
    return info;
  }
  // Large case: power iteration for s_max, inverse iteration with deflation
  // for the smallest positive singular value (tolerance 1e-10 relative).
  info.s_max = detail::power_iteration_smax(a, max_iter, 1e-12);
  const Matrix gram = a.transpose() * a;
  const double shift = std::pow(1e-10 * info.s_max, 2);
  Eigen::LDLT<Matrix> ldlt(gram + shift * Matrix::Identity(n, n));
  std::vector<Vector> deflated;  // null-space directions found so far
  Vector v = Vector::Ones(n).normalized();
  double rayleigh_prev = -1.0;
  for (int k = 0; k < max_iter; ++k) {
    Vector w = ldlt.solve(v);
    for (const Vector &z : deflated) w -= z.dot(w) * z;
    const double nrm = w.norm();
    if (nrm == 0.0) throw convergence_failure("s_pmin inverse iteration stalled");
    v = w / nrm;
    const double rayleigh = v.dot(gram * v);
    if (rayleigh_prev >= 0.0 &&
        std::abs(rayleigh - rayleigh_prev) <= 1e-12 * std::abs(rayleigh)) {
      const double s = std::sqrt(std::max(0.0, rayleigh));
      if (s > 1e-10 * info.s_max) {
        info.s_pmin = s;
        return info;
      }
      deflated.push_back(v);
      if (static_cast<int>(deflated.size()) >= n)
        throw convergence_failure("no positive singular value found");
      v = Vector::Random(n).normalized();
      rayleigh_prev = -1.0;
      continue;
    }
    rayleigh_prev = rayleigh;
  }
  throw convergence_failure("inverse iteration for s_pmin did not converge");
}

inline const SpectralInfo &spectral(const ConstrainedProblem &p) {
  if (!p.spectral_cache) p.spectral_cache = spectral_constants(p.constraints);
  return *p.spectral_cache;
}

}  // namespace softpen

#endif
