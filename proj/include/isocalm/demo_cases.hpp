#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "isocalm/certificates.hpp"

namespace isocalm {

struct DemoCase {
  std::string name;
  std::string description;
  ProblemInstance instance;
  Conclusion::Kind expected;
  std::optional<Conclusion::Kind> expected_primal_dual;
};

namespace demo {

inline Regularizer l1(Index n, double weight = 1.0) {
  reg::GroupLasso g;
  g.dim = n;
  g.weight = weight;
  for (Index i = 0; i < n; ++i) g.groups.push_back({i});
  return Regularizer(g);
}

inline ProblemInstance make(Matrix phi, Vector b, double mu, LinearOp k, Regularizer r) {
  ProblemInstance p;
  p.phi = LinearOp::dense(std::move(phi));
  p.b = std::move(b);
  p.mu = mu;
  p.k = std::move(k);
  p.reg = std::move(r);
  p.validate();
  return p;
}

inline Matrix mat(Index r, Index c, std::initializer_list<double> e) {
  Matrix m(r, c);
  auto it = e.begin();
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

inline Vector vecd(std::initializer_list<double> e) {
  Vector v(static_cast<Index>(e.size()));
  Index i = 0;
  for (double x : e) v(i++) = x;
  return v;
}

/// Samples e11, (e12 + e21)/sqrt 2 and e22 of a 2x2 matrix (row-major vec).
inline Matrix symmetric_sampling() {
  const double s = 1.0 / std::sqrt(2.0);
  return mat(3, 4, {1, 0, 0, 0, 0, s, s, 0, 0, 0, 0, 1});
}

inline ProblemInstance scalar_lasso() {
  return make(mat(1, 1, {1}), vecd({3}), 1.0, LinearOp::identity(1), l1(1));
}

inline ProblemInstance lasso_segment() {
  return make(mat(1, 2, {1, 1}), vecd({2}), 1.0, LinearOp::identity(2), l1(2));
}

inline ProblemInstance lasso_column() {
  return make(mat(1, 2, {1, 0}), vecd({3}), 1.0, LinearOp::identity(2), l1(2));
}

inline ProblemInstance lasso_identity() {
  return make(Matrix::Identity(2, 2), vecd({3, 0.5}), 1.0, LinearOp::identity(2), l1(2));
}

inline ProblemInstance zero_design() {
  return make(mat(1, 1, {0}), vecd({1}), 1.0, LinearOp::identity(1), l1(1));
}

inline ProblemInstance nuclear_nondegenerate() {
  return make(symmetric_sampling(), vecd({2, 0, 0.5}), 1.0, LinearOp::identity(4), Regularizer(reg::Nuclear{2, 2, 1.0}));
}

inline ProblemInstance nuclear_degenerate() {
  return make(symmetric_sampling(), vecd({1, 0, 1}), 1.0, LinearOp::identity(4), Regularizer(reg::Nuclear{2, 2, 1.0}));
}

inline ProblemInstance fused_pair() {
  return make(Matrix::Identity(2, 2), vecd({0, 0.5}), 1.0, LinearOp::grad1d(2), l1(1));
}

inline ProblemInstance duplicated_analysis() {
  return make(mat(1, 1, {1}), vecd({1}), 1.0, LinearOp::dense(mat(2, 1, {1, 1})), l1(2));
}

inline ProblemInstance box_corner() {
  return make(mat(1, 2, {1, 1}), vecd({3}), 1.0, LinearOp::identity(2),
              Regularizer(reg::PolyhedralIndicator{mat(4, 2, {1, 0, 0, 1, -1, 0, 0, -1}), vecd({1, 1, 0, 0})}));
}

}  // namespace demo

inline std::vector<DemoCase> demo_cases() {
  using C = Conclusion;
  return {
      {"scalar_lasso", "phi = 1, b = 3, l1: x = 2", demo::scalar_lasso(), C::isolated_calm, C::isolated_calm},
      {"lasso_segment", "phi = [1 1], b = 2, l1: solution segment", demo::lasso_segment(), C::not_isolated_calm,
       C::not_isolated_calm},
      {"lasso_column", "phi = [1 0], b = 3, l1: x = (2, 0)", demo::lasso_column(), C::isolated_calm,
       C::isolated_calm},
      {"lasso_identity", "phi = I, injective design", demo::lasso_identity(), C::isolated_calm, C::isolated_calm},
      {"zero_design", "phi = 0, x = 0 with v = 0", demo::zero_design(), C::isolated_calm, C::isolated_calm},
      {"nuclear_nondegenerate", "X = diag(1,0), Y = diag(1,0.5)", demo::nuclear_nondegenerate(), C::isolated_calm,
       C::isolated_calm},
      {"nuclear_degenerate", "X = 0, Y = I: PSD tangent cone", demo::nuclear_degenerate(), C::inconclusive,
       std::nullopt},
      {"fused_pair", "K = 1-D gradient, interior multiplier", demo::fused_pair(), C::isolated_calm,
       C::isolated_calm},
      {"duplicated_analysis", "K = [1; 1]: SRCQ fails", demo::duplicated_analysis(), C::isolated_calm,
       C::not_isolated_calm},
      {"box_corner", "box indicator, solution at a vertex", demo::box_corner(), C::isolated_calm, C::isolated_calm},
  };
}

}  // namespace isocalm
