#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "isocalm/error.hpp"

namespace isocalm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical thresholds shared by every kernel and certificate decision.
struct Tolerances {
  /// Singular values below rank * sigma_max count as zero.
  double rank = 1e-9;
  double orth = 1e-10;
  double member = 1e-7;
  double kkt = 1e-10;

  void validate() const {
    if (!(rank > 0.0 && rank < 1.0)) throw ValidationError("tol.rank", "must lie in (0, 1)");
    if (!(orth > 0.0)) throw ValidationError("tol.orth", "must be positive");
    if (!(member > 0.0)) throw ValidationError("tol.member", "must be positive");
    if (!(kkt > 0.0)) throw ValidationError("tol.kkt", "must be positive");
  }
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

inline void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw ValidationError(what, "non-finite entry");
}

/// Linear subspace of R^n stored by an orthonormal basis (n x dim).
struct Subspace {
  Index ambient_dim = 0;
  Matrix basis;  // ambient_dim x dim, orthonormal columns

  Subspace() = default;
  Subspace(Index n, Matrix b) : ambient_dim(n), basis(std::move(b)) {}

  static Subspace zero(Index n) { return {n, Matrix(n, 0)}; }
  static Subspace full(Index n) { return {n, Matrix::Identity(n, n)}; }

  Index dim() const { return basis.cols(); }
  bool is_zero() const { return basis.cols() == 0; }
  bool is_full() const { return basis.cols() == ambient_dim; }

  Vector project(const Vector& v) const {
    if (basis.cols() == 0) return Vector::Zero(ambient_dim);
    return basis * (basis.transpose() * v);
  }
  double residual(const Vector& v) const { return (v - project(v)).norm(); }
  bool contains(const Vector& v, double tol) const { return residual(v) <= tol; }

  /// Orthogonal projector onto the complement, as a dense matrix.
  Matrix complement_projector() const {
    Matrix p = Matrix::Identity(ambient_dim, ambient_dim);
    if (basis.cols() > 0) p -= basis * basis.transpose();
    return p;
  }
};

struct SvdResult {
  Matrix u;
  Vector sigma;  // nonincreasing, length min(rows, cols)
  Matrix v;
};

/// Full SVD a = u * diag(sigma) * v^T with square orthogonal u, v.
inline SvdResult svd(const Matrix& a) {
  require_finite(a, "svd");
  const Index m = a.rows(), n = a.cols();
  if (m == 0 || n == 0) return {Matrix::Identity(m, m), Vector(0), Matrix::Identity(n, n)};
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

inline Index numerical_rank(const Vector& sigma, double tol_rank) {
  if (sigma.size() == 0) return 0;
  const double smax = sigma(0);
  if (smax <= 0.0) return 0;
  Index r = 0;
  while (r < sigma.size() && sigma(r) > tol_rank * smax) ++r;
  return r;
}

inline Subspace null_space(const Matrix& a, const Tolerances& tol) {
  require_finite(a, "null_space");
  const Index n = a.cols();
  if (a.rows() == 0) return Subspace::full(n);
  const SvdResult s = svd(a);
  const Index r = numerical_rank(s.sigma, tol.rank);
  return {n, s.v.rightCols(n - r)};
}

/// Orthonormal basis of the column space.
inline Subspace range_space(const Matrix& a, const Tolerances& tol) {
  require_finite(a, "range_space");
  const Index m = a.rows();
  if (a.cols() == 0) return Subspace::zero(m);
  const SvdResult s = svd(a);
  const Index r = numerical_rank(s.sigma, tol.rank);
  return {m, s.u.leftCols(r)};
}

/// Span of the columns of `m`, re-orthonormalized.
inline Subspace span_of(Index ambient, const Matrix& m, const Tolerances& tol) {
  if (m.cols() == 0) return Subspace::zero(ambient);
  return range_space(m, tol);
}

inline Subspace orthogonal_complement(const Subspace& s, const Tolerances& tol) {
  if (s.is_zero()) return Subspace::full(s.ambient_dim);
  return null_space(s.basis.transpose(), tol);
}

struct EigResult {
  Matrix q;
  Vector lambda;  // nonincreasing
};

inline EigResult sym_eig(const Matrix& s, const Tolerances& tol) {
  require_finite(s, "sym_eig");
  if (s.rows() != s.cols()) throw ValidationError("sym_eig", "matrix is not square");
  const double scale = std::max(1.0, s.norm());
  if ((s - s.transpose()).norm() > tol.orth * scale)
    throw ValidationError("sym_eig", "matrix is not symmetric");
  const Index n = s.rows();
  if (n == 0) return {Matrix(0, 0), Vector(0)};
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  EigResult out{es.eigenvectors().rowwise().reverse(), es.eigenvalues().reverse()};
  return out;
}

/// P ∩ Q as the null space of the stacked complement projectors.
inline Subspace intersect_subspaces(const Subspace& p, const Subspace& q, const Tolerances& tol) {
  if (p.ambient_dim != q.ambient_dim)
    throw ValidationError("intersect_subspaces", "ambient dimensions differ");
  const Index n = p.ambient_dim;
  if (p.is_zero() || q.is_zero()) return Subspace::zero(n);
  if (p.is_full()) return q;
  if (q.is_full()) return p;
  Matrix stacked(2 * n, n);
  stacked << p.complement_projector(), q.complement_projector();
  // ||stacked w|| bounds the distance of a unit w to both P and Q, so the
  // membership tolerance is the cut.
  const SvdResult s = svd(stacked);
  Index r = 0;
  while (r < s.sigma.size() && s.sigma(r) > tol.member) ++r;
  return {n, s.v.rightCols(n - r)};
}

/// Lawson-Hanson nonnegative least squares: argmin ||a x - b|| over x >= 0.
inline Vector nnls(const Matrix& a, const Vector& b, int max_iter = 0) {
  const Index n = a.cols();
  Vector x = Vector::Zero(n);
  if (n == 0) return x;
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);
  std::vector<bool> passive(static_cast<size_t>(n), false);
  const double eps = 1e-13 * std::max(1.0, a.norm() * std::max(1.0, b.norm()));
  Vector w = a.transpose() * (b - a * x);
  for (int outer = 0; outer < max_iter; ++outer) {
    Index best = -1;
    double best_w = eps;
    for (Index j = 0; j < n; ++j)
      if (!passive[static_cast<size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<size_t>(best)] = true;
    for (int inner = 0; inner < max_iter; ++inner) {
      std::vector<Index> idx;
      for (Index j = 0; j < n; ++j)
        if (passive[static_cast<size_t>(j)]) idx.push_back(j);
      Matrix ap(a.rows(), static_cast<Index>(idx.size()));
      for (size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(idx[k]);
      const Vector zp = ap.completeOrthogonalDecomposition().solve(b);
      bool feasible = true;
      for (Index k = 0; k < zp.size(); ++k)
        if (zp(k) <= 0.0) feasible = false;
      if (feasible) {
        x.setZero();
        for (size_t k = 0; k < idx.size(); ++k) x(idx[k]) = zp(static_cast<Index>(k));
        break;
      }
      double alpha = 1.0;
      for (size_t k = 0; k < idx.size(); ++k) {
        const double zk = zp(static_cast<Index>(k));
        if (zk <= 0.0) {
          const double xk = x(idx[k]);
          alpha = std::min(alpha, xk / (xk - zk));
        }
      }
      for (size_t k = 0; k < idx.size(); ++k)
        x(idx[k]) += alpha * (zp(static_cast<Index>(k)) - x(idx[k]));
      for (size_t k = 0; k < idx.size(); ++k)
        if (x(idx[k]) <= eps) {
          x(idx[k]) = 0.0;
          passive[static_cast<size_t>(idx[k])] = false;
        }
    }
    w = a.transpose() * (b - a * x);
  }
  return x;
}

/// Spectral norm, zero for empty matrices.
inline double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return svd(a).sigma(0);
}

}  // namespace isocalm
