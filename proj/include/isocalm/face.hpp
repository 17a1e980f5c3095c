#pragma once

#include <variant>

#include "isocalm/linalg.hpp"

namespace isocalm {

enum class Tri { yes, no, unknown };

inline const char* to_string(Tri t) {
  switch (t) {
    case Tri::yes: return "holds";
    case Tri::no: return "fails";
    default: return "unknown";
  }
}

/// Row-major vectorization helpers for m x n matrices stored as R^{mn}.
inline Matrix unvec(const Vector& v, Index m, Index n) {
  Matrix w(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) w(i, j) = v(i * n + j);
  return w;
}

inline Vector vec(const Matrix& w) {
  Vector v(w.size());
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) v(i * w.cols() + j) = w(i, j);
  return v;
}

/// {y : a y <= c, e y = f}.
struct PolyhedralFace {
  Matrix a;
  Vector c;
  Matrix e;
  Vector f;
};

/// {u S v^T : S symmetric positive semidefinite (p x p)} inside R^{m x n}.
struct PsdFace {
  Matrix u;  // m x p, orthonormal columns
  Matrix v;  // n x p, orthonormal columns
  Index m = 0, n = 0;
  Index p() const { return u.cols(); }
};

/// Exact description of the conjugate subdifferential set at the multiplier,
/// plus the classification data that produced it (reported verbatim).
struct FaceDescription {
  std::variant<PolyhedralFace, PsdFace> set;
  Index ambient = 0;
  /// Group-Lasso: per group 0 = interior, 1 = boundary. Nuclear: empty.
  std::vector<int> boundary_groups;
  /// Nuclear: count of multiplier singular values at the weight.
  Index unit_singular_values = 0;

  bool polyhedral() const { return std::holds_alternative<PolyhedralFace>(set); }
};

inline double face_distance_polyhedral(const PolyhedralFace& f, const Vector& y) {
  double viol = 0.0;
  if (f.a.rows() > 0) viol = std::max(viol, (f.a * y - f.c).maxCoeff());
  if (f.e.rows() > 0) viol = std::max(viol, (f.e * y - f.f).norm());
  return viol;
}

/// Residual of y against the PSD face: off-structure mass, asymmetry and the
/// most negative eigenvalue of the compressed block.
inline double face_distance_psd(const PsdFace& f, const Vector& y, const Tolerances& tol) {
  const Matrix w = unvec(y, f.m, f.n);
  const Matrix h = f.u.transpose() * w * f.v;
  double viol = (w - f.u * h * f.v.transpose()).norm();
  viol = std::max(viol, (h - h.transpose()).norm());
  if (h.rows() > 0) {
    const Matrix hs = 0.5 * (h + h.transpose());
    const EigResult er = sym_eig(hs, tol);
    viol = std::max(viol, -er.lambda(er.lambda.size() - 1));
  }
  return viol;
}

inline double face_violation(const FaceDescription& face, const Vector& y, const Tolerances& tol) {
  if (const auto* p = std::get_if<PolyhedralFace>(&face.set)) return face_distance_polyhedral(*p, y);
  return face_distance_psd(std::get<PsdFace>(face.set), y, tol);
}

}  // namespace isocalm
