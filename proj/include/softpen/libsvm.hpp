#ifndef SOFTPEN_LIBSVM_HPP
#define SOFTPEN_LIBSVM_HPP

#include <cstdlib>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "softpen/problem.hpp"

namespace softpen {

struct SvmDataset {
  SparseRowMatrix features;  // m x n, 1-based indices shifted to 0-based
  Vector labels;             // in {-1, +1}
  int m = 0;
  int n = 0;
  double positive_raw = 1.0;   // raw label mapped to +1
  double negative_raw = -1.0;  // raw label mapped to -1
};

// "<label> <idx>:<val> ..." per line, 1-based strictly increasing indices.
// Exactly two distinct raw labels; {-1,+1} kept as-is, otherwise the smaller
// raw label maps to +1 (libsvm mushrooms: {1,2} -> {+1,-1}).
inline SvmDataset parse_libsvm(std::istream &in, int n_override = 0) {
  std::vector<double> raw_labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::string line;
  int lineno = 0;
  int max_idx = 0;

  auto is_ws = [](char c) { return c == ' ' || c == '\t'; };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = 0;
    while (pos < line.size() && is_ws(line[pos])) ++pos;
    if (pos == line.size()) continue;

    auto next_token = [&]() -> std::pair<std::size_t, std::string> {
      while (pos < line.size() && is_ws(line[pos])) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && !is_ws(line[pos])) ++pos;
      return {start, line.substr(start, pos - start)};
    };

    const auto [label_col, label_tok] = next_token();
    char *end = nullptr;
    const double label = std::strtod(label_tok.c_str(), &end);
    if (end == label_tok.c_str() || *end != '\0')
      throw parse_error(lineno, static_cast<int>(label_col) + 1,
                        "malformed label '" + label_tok + "'");
    raw_labels.push_back(label);

    std::vector<std::pair<int, double>> entries;
    int prev_idx = 0;
    while (true) {
      const auto [col, tok] = next_token();
      if (tok.empty()) break;
      const std::size_t sep = tok.find(':');
      if (sep == std::string::npos || sep == 0 || sep + 1 == tok.size())
        throw parse_error(lineno, static_cast<int>(col) + 1,
                          "malformed feature token '" + tok + "'");
      const std::string idx_s = tok.substr(0, sep);
      const std::string val_s = tok.substr(sep + 1);
      const long idx = std::strtol(idx_s.c_str(), &end, 10);
      if (end == idx_s.c_str() || *end != '\0' || idx < 1)
        throw parse_error(lineno, static_cast<int>(col) + 1,
                          "malformed feature index '" + idx_s + "'");
      if (idx <= prev_idx)
        throw parse_error(lineno, static_cast<int>(col) + 1,
                          "nonincreasing feature index " + idx_s);
      const double val = std::strtod(val_s.c_str(), &end);
      if (end == val_s.c_str() || *end != '\0')
        throw parse_error(lineno,
                          static_cast<int>(col + sep + 1) + 1,
                          "malformed feature value '" + val_s + "'");
      prev_idx = static_cast<int>(idx);
      max_idx = std::max(max_idx, prev_idx);
      entries.emplace_back(prev_idx - 1, val);
    }
    rows.push_back(std::move(entries));
  }

  std::set<double> distinct(raw_labels.begin(), raw_labels.end());
  if (distinct.size() != 2)
    throw parse_error(lineno, 1,
                      "expected exactly 2 distinct labels, found " +
                          std::to_string(distinct.size()));

  SvmDataset d;
  if (distinct.count(-1.0) && distinct.count(1.0)) {
    d.positive_raw = 1.0;
    d.negative_raw = -1.0;
  } else {
    d.positive_raw = *distinct.begin();
    d.negative_raw = *std::next(distinct.begin());
  }
  d.m = static_cast<int>(rows.size());
  d.n = n_override > 0 ? n_override : max_idx;
  if (max_idx > d.n)
    throw parse_error(1, 1, "feature index exceeds requested dimension");

  d.labels.resize(d.m);
  for (int i = 0; i < d.m; ++i)
    d.labels[i] = raw_labels[i] == d.positive_raw ? 1.0 : -1.0;

  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < d.m; ++i)
    for (const auto &[j, v] : rows[i]) trips.emplace_back(i, j, v);
  d.features.resize(d.m, d.n);
  d.features.setFromTriplets(trips.begin(), trips.end());
  d.features.makeCompressed();
  return d;
}

// Internal emitter for test fixtures; parse_libsvm(emit_libsvm(d)) == d.
inline void emit_libsvm(const SvmDataset &d, std::ostream &out) {
  for (int i = 0; i < d.m; ++i) {
    out << (d.labels[i] > 0 ? "1" : "-1");
    std::ostringstream os;
    for (SparseRowMatrix::InnerIterator it(d.features, i); it; ++it) {
      os.str("");
      os.precision(17);
      os << it.value();
      out << ' ' << (it.col() + 1) << ':' << os.str();
    }
    out << '\n';
  }
}

// 0.5 ||x||^2 as a single-component smooth sum (hard-margin SVM objective).
class UnitQuadratic final : public SmoothSum {
 public:
  explicit UnitQuadratic(int n) : SmoothSum(1, 1.0, 1.0), n_(n) {}

  double component_value(int i, const Vector &x) const override {
    if (i != 0) throw index_out_of_range("component index");
    return 0.5 * x.squaredNorm();
  }
  void component_gradient(int i, const Vector &x, Vector &g) const override {
    if (i != 0) throw index_out_of_range("component index");
    g = x;
  }
  bool quadratic_form(Matrix *hessian, Vector *linear) const override {
    if (hessian) *hessian = Matrix::Identity(n_, n_);
    if (linear) *linear = Vector::Zero(n_);
    return true;
  }

 private:
  int n_;
};

struct FeatureScaling {
  Vector min;    // per-column minimum before scaling
  Vector range;  // max - min; 0 for constant columns (zeroed out)
};

// min 0.5||x||^2 s.t. b_i <a_i, x> >= 1, written as -b_i a_i^T x <= -1 and
// row-normalized. Features are min-max scaled per column to [0,1] first.
inline ConstrainedProblem build_svm_problem(const SvmDataset &d,
                                            FeatureScaling *scaling = nullptr) {
  Matrix feats(d.features);
  FeatureScaling sc;
  sc.min = feats.colwise().minCoeff().transpose();
  sc.range = feats.colwise().maxCoeff().transpose() - sc.min;
  for (int j = 0; j < d.n; ++j) {
    if (sc.range[j] > 0.0)
      feats.col(j) = (feats.col(j).array() - sc.min[j]) / sc.range[j];
    else
      feats.col(j).setZero();
  }
  if (scaling) *scaling = sc;

  Matrix a_raw(d.m, d.n);
  for (int i = 0; i < d.m; ++i) a_raw.row(i) = -d.labels[i] * feats.row(i);
  const Vector b_raw = Vector::Constant(d.m, -1.0);

  ConstrainedProblem p;
  p.objective = std::make_shared<UnitQuadratic>(d.n);
  p.prox = ProximalTerm::zero();
  p.constraints = LinearConstraints::normalize_rows(a_raw, b_raw);
  return p;
}

}  // namespace softpen

#endif
