#pragma once

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isocalm/cone.hpp"
#include "isocalm/face.hpp"
#include "isocalm/linalg.hpp"

namespace isocalm {

namespace reg {
/// w * sum_J ||y_J||; singleton groups give the weighted l1 norm.
struct GroupLasso {
  Index dim = 0;
  std::vector<std::vector<Index>> groups;
  double weight = 1.0;
};
/// w * ||mat(y)||_* with mat the row-major m x n reshape.
struct Nuclear {
  Index m = 0, n = 0;
  double weight = 1.0;
};
/// Indicator of {y : a y <= c}.
struct PolyhedralIndicator {
  Matrix a;
  Vector c;
};
}  // namespace reg

struct QgcFlags {
  bool primal_qgc = false;
  bool dual_qgc = false;
  bool polyhedral_conjugate_face = false;
};

/// Projection onto {y : a y <= c}: Hildreth sweeps identify the active set,
/// which is then solved exactly and checked against the KKT conditions.
/// `hint` carries the last active set between calls.
inline Vector project_polyhedron(const Matrix& a, const Vector& c, const Vector& y, std::vector<Index>* hint = nullptr) {
  const Index m = a.rows();
  const double scale = 1.0 + y.norm() + c.cwiseAbs().maxCoeff();
  const double eps = 1e-13 * scale;
  if (m == 0 || (a * y - c).maxCoeff() <= 0.0) {
    if (hint) hint->clear();
    return y;
  }
  auto polish = [&](const std::vector<Index>& act) -> std::optional<Vector> {
    if (act.empty()) return std::nullopt;
    Matrix as(static_cast<Index>(act.size()), a.cols());
    Vector cs(as.rows());
    for (size_t i = 0; i < act.size(); ++i) {
      as.row(static_cast<Index>(i)) = a.row(act[i]);
      cs(static_cast<Index>(i)) = c(act[i]);
    }
    const Matrix g = as * as.transpose();
    const Vector lam = g.completeOrthogonalDecomposition().solve(as * y - cs);
    if (lam.size() > 0 && lam.minCoeff() < -eps) return std::nullopt;
    const Vector u = y - as.transpose() * lam;
    if ((as * u - cs).cwiseAbs().maxCoeff() > 1e3 * eps) return std::nullopt;
    if ((a * u - c).maxCoeff() > 1e3 * eps) return std::nullopt;
    return u;
  };
  if (hint && !hint->empty())
    if (auto u = polish(*hint)) return *u;

  Vector norms2 = a.rowwise().squaredNorm();
  Vector lam = Vector::Zero(m);
  Vector u = y;
  for (int sweep = 1; sweep <= 200000; ++sweep) {
    for (Index i = 0; i < m; ++i) {
      if (norms2(i) == 0.0) continue;
      const double li = std::max(0.0, lam(i) + (a.row(i).dot(u) - c(i)) / norms2(i));
      u -= (li - lam(i)) * a.row(i).transpose();
      lam(i) = li;
    }
    if (sweep % 25 == 0) {
      std::vector<Index> act;
      for (Index i = 0; i < m; ++i)
        if (lam(i) > 0.0) act.push_back(i);
      if (auto p = polish(act)) {
        if (hint) *hint = act;
        return *p;
      }
    }
  }
  return u;
}

class Regularizer {
 public:
  using Spec = std::variant<reg::GroupLasso, reg::Nuclear, reg::PolyhedralIndicator>;

  Regularizer() = default;
  explicit Regularizer(Spec s) : spec_(std::move(s)) { validate(); }

  const Spec& spec() const { return spec_; }
  bool is_group_lasso() const { return std::holds_alternative<reg::GroupLasso>(spec_); }
  bool is_nuclear() const { return std::holds_alternative<reg::Nuclear>(spec_); }
  bool is_polyhedral() const { return std::holds_alternative<reg::PolyhedralIndicator>(spec_); }

  std::string kind_name() const {
    static const char* names[] = {"group_lasso", "nuclear", "polyhedral_indicator"};
    return names[spec_.index()];
  }

  Index dim() const {
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) return g->dim;
    if (const auto* n = std::get_if<reg::Nuclear>(&spec_)) return n->m * n->n;
    return std::get<reg::PolyhedralIndicator>(spec_).a.cols();
  }

  QgcFlags qgc_flags() const {
    if (is_nuclear()) return {true, true, false};
    return {true, true, true};
  }

  double value(const Vector& y, const Tolerances& tol = {}) const {
    check_dim(y, "value");
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      double s = 0.0;
      for (const auto& grp : g->groups) s += gather(y, grp).norm();
      return g->weight * s;
    }
    if (const auto* nu = std::get_if<reg::Nuclear>(&spec_)) return nu->weight * svd(unvec(y, nu->m, nu->n)).sigma.sum();
    const auto& p = std::get<reg::PolyhedralIndicator>(spec_);
    if (p.a.rows() == 0 || (p.a * y - p.c).maxCoeff() <= tol.member) return 0.0;
    return std::numeric_limits<double>::infinity();
  }

  /// argmin_u t g(u) + 0.5 ||u - y||^2.
  Vector prox(double t, const Vector& y, std::vector<Index>* hint = nullptr) const {
    check_dim(y, "prox");
    if (!(t > 0.0)) throw ValidationError("t", "prox step must be positive");
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      Vector u = y;
      for (const auto& grp : g->groups) {
        const double nr = gather(y, grp).norm();
        const double shrink = nr > 0.0 ? std::max(0.0, 1.0 - t * g->weight / nr) : 0.0;
        for (Index i : grp) u(i) = shrink * y(i);
      }
      return u;
    }
    if (const auto* nu = std::get_if<reg::Nuclear>(&spec_)) {
      const SvdResult s = svd(unvec(y, nu->m, nu->n));
      const Index k = s.sigma.size();
      const Vector shrunk = (s.sigma.array() - t * nu->weight).cwiseMax(0.0);
      return vec(s.u.leftCols(k) * shrunk.asDiagonal() * s.v.leftCols(k).transpose());
    }
    const auto& p = std::get<reg::PolyhedralIndicator>(spec_);
    return project_polyhedron(p.a, p.c, y, hint);
  }

  /// prox of t g* via the Moreau decomposition.
  Vector prox_conj(double t, const Vector& y) const { return y - t * prox(1.0 / t, y / t); }

  /// v in the subdifferential at x.
  bool subdiff_contains(const Vector& x, const Vector& v, double tol) const {
    check_dim(x, "x");
    check_dim(v, "v");
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      for (const auto& grp : g->groups) {
        const Vector xj = gather(x, grp), vj = gather(v, grp);
        const double nx = xj.norm();
        if (nx > tol) {
          if ((vj - g->weight * xj / nx).norm() > tol) return false;
        } else if (vj.norm() > g->weight + tol) {
          return false;
        }
      }
      return true;
    }
    if (is_nuclear()) return (x - prox(1.0, x + v)).norm() <= tol;
    const auto& p = std::get<reg::PolyhedralIndicator>(spec_);
    if (p.a.rows() > 0 && (p.a * x - p.c).maxCoeff() > tol) return false;
    const Matrix act = active_rows(p, x, tol);
    if (act.rows() == 0) return v.norm() <= tol;
    const Vector lam = nnls(act.transpose(), v);
    return (act.transpose() * lam - v).norm() <= tol;
  }

  /// The conjugate subdifferential at y_bar (the set whose subdifferential
  /// contains y_bar). Polyhedral faces are exposed at `anchor` when given.
  FaceDescription conj_subdiff_face(const Vector& y_bar, const Tolerances& tol,
                                    const std::optional<Vector>& anchor = std::nullopt) const {
    check_dim(y_bar, "y_bar");
    const Index d = dim();
    FaceDescription face;
    face.ambient = d;
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      std::vector<Vector> ineq, eq;
      for (const auto& grp : g->groups) {
        const Vector yj = gather(y_bar, grp);
        const double ratio = yj.norm() / g->weight;
        if (ratio > 1.0 + tol.member) throw ValidationError("y_bar", "group dual norm exceeds the weight");
        const bool boundary = std::abs(ratio - 1.0) <= tol.member;
        face.boundary_groups.push_back(boundary ? 1 : 0);
        const Index gs = static_cast<Index>(grp.size());
        if (boundary) {
          const Vector u = yj / yj.norm();
          Vector row = Vector::Zero(d);
          scatter(row, grp, -u);
          ineq.push_back(row);
          const Subspace perp = null_space(u.transpose(), tol);
          for (Index j = 0; j < perp.dim(); ++j) {
            Vector r = Vector::Zero(d);
            scatter(r, grp, perp.basis.col(j));
            eq.push_back(r);
          }
        } else {
          for (Index j = 0; j < gs; ++j) {
            Vector r = Vector::Zero(d);
            r(grp[static_cast<size_t>(j)]) = 1.0;
            eq.push_back(r);
          }
        }
      }
      face.set = PolyhedralFace{rows_of(ineq, d), Vector::Zero(static_cast<Index>(ineq.size())), rows_of(eq, d),
                                Vector::Zero(static_cast<Index>(eq.size()))};
      return face;
    }
    if (const auto* nu = std::get_if<reg::Nuclear>(&spec_)) {
      const SvdResult s = svd(unvec(y_bar, nu->m, nu->n));
      if (s.sigma.size() > 0 && s.sigma(0) / nu->weight > 1.0 + tol.member)
        throw ValidationError("y_bar", "spectral norm exceeds the weight");
      Index p = 0;
      while (p < s.sigma.size() && s.sigma(p) / nu->weight >= 1.0 - tol.member) ++p;
      face.unit_singular_values = p;
      const Matrix u = s.u.leftCols(p), v = s.v.leftCols(p);
      if (p >= 2) {
        face.set = PsdFace{u, v, nu->m, nu->n};
        return face;
      }
      // p <= 1: {0} or a single ray, both polyhedral.
      if (p == 0) {
        face.set = PolyhedralFace{Matrix(0, d), Vector(0), Matrix::Identity(d, d), Vector::Zero(d)};
        return face;
      }
      const Vector g = vec(u * v.transpose());
      const Matrix eq = detail::complement_rows(Subspace(d, g.normalized()), tol);
      face.set = PolyhedralFace{-g.transpose(), Vector::Zero(1), eq, Vector::Zero(eq.rows())};
      return face;
    }
    const auto& p = std::get<reg::PolyhedralIndicator>(spec_);
    face.set = polyhedral_face(p, y_bar, tol, anchor);
    return face;
  }

  /// Tangent cone of the conjugate subdifferential at x_bar (a point of Y).
  ConeDescription tangent_conj_subdiff(const Vector& y_bar, const Vector& x_bar, const Tolerances& tol) const {
    const FaceDescription face = conj_subdiff_face(y_bar, tol, x_bar);
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      detail::require_in_face(face, x_bar, tol);
      const Index d = dim();
      std::vector<Vector> span, rays;
      for (size_t j = 0; j < g->groups.size(); ++j) {
        if (!face.boundary_groups[j]) continue;
        const auto& grp = g->groups[j];
        Vector dir = Vector::Zero(d);
        scatter(dir, grp, gather(y_bar, grp).normalized());
        if (gather(x_bar, grp).norm() > detail::act_tol(x_bar, tol)) span.push_back(dir);
        else rays.push_back(dir);
      }
      return simplify(ConeDescription::rays(span_of(d, cols_of(span, d), tol), cols_of(rays, d)), tol);
    }
    return tangent_of_face(face, x_bar, tol);
  }

  /// Tangent cone of the subdifferential at x_bar, taken at y_bar.
  ConeDescription tangent_subdiff(const Vector& x_bar, const Vector& y_bar, const Tolerances& tol) const {
    const double at = detail::act_tol(y_bar, tol) + detail::act_tol(x_bar, tol);
    if (!subdiff_contains(x_bar, y_bar, 10.0 * at))
      throw ValidationError("y_bar", "multiplier is not a subgradient at x_bar");
    const Index d = dim();
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      std::vector<Vector> ineq, eq;
      for (const auto& grp : g->groups) {
        const Vector xj = gather(x_bar, grp), yj = gather(y_bar, grp);
        if (xj.norm() > detail::act_tol(x_bar, tol)) {
          for (Index i : grp) {
            Vector r = Vector::Zero(d);
            r(i) = 1.0;
            eq.push_back(r);
          }
        } else if (std::abs(yj.norm() / g->weight - 1.0) <= tol.member) {
          Vector r = Vector::Zero(d);
          scatter(r, grp, yj.normalized());
          ineq.push_back(r);
        }
      }
      return simplify(ConeDescription::polyhedral(d, rows_of(ineq, d), rows_of(eq, d)), tol);
    }
    if (const auto* nu = std::get_if<reg::Nuclear>(&spec_)) return nuclear_tangent_subdiff(*nu, x_bar, y_bar, tol);
    const auto& p = std::get<reg::PolyhedralIndicator>(spec_);
    const Matrix act = active_rows(p, x_bar, detail::act_tol(x_bar, tol));
    const Subspace line = y_bar.norm() > 0.0 ? Subspace(d, y_bar.normalized()) : Subspace::zero(d);
    return simplify(ConeDescription::rays(line, act.transpose()), tol);
  }

  /// Whether range(k) meets the relative interior of the conjugate face;
  /// `anchor` is a point of face ∩ range(k) (k x_bar in the certificates).
  Tri ri_intersects_range(const Vector& y_bar, const Matrix& k, const Vector& anchor, const Tolerances& tol) const {
    const FaceDescription face = conj_subdiff_face(y_bar, tol, anchor);
    if (face.polyhedral()) return polyhedral_ri_meets_range(face, anchor, k, tol);
    const auto& f = std::get<PsdFace>(face.set);
    const Subspace range = range_space(k, tol);
    if (detail::psd_kernel(f, anchor, tol).cols() == 0 || range.is_full()) return Tri::yes;
    // Candidate: the centre U_p I V_p^T pushed into range ∩ block span.
    const Subspace block = detail::psd_block_span(f.u, f.v, f.m, f.n, tol);
    const Subspace meet = intersect_subspaces(block, range, tol);
    if (meet.is_zero()) return Tri::unknown;
    const Vector centre = meet.project(vec(f.u * f.v.transpose()));
    const Matrix h = f.u.transpose() * unvec(centre, f.m, f.n) * f.v;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()));
    if (es.eigenvalues().minCoeff() > tol.member) return Tri::yes;
    return Tri::unknown;
  }

  void validate() const {
    if (const auto* g = std::get_if<reg::GroupLasso>(&spec_)) {
      if (g->dim < 1) throw ValidationError("reg.dim", "must be >= 1");
      if (!(g->weight > 0.0) || !std::isfinite(g->weight)) throw ValidationError("reg.weight", "must be positive");
      std::vector<int> seen(static_cast<size_t>(g->dim), 0);
      for (size_t j = 0; j < g->groups.size(); ++j) {
        const std::string path = "reg.groups[" + std::to_string(j) + "]";
        if (g->groups[j].empty()) throw ValidationError(path, "empty group");
        for (Index i : g->groups[j]) {
          if (i < 0 || i >= g->dim) throw ValidationError(path, "index out of range");
          if (seen[static_cast<size_t>(i)]++) throw ValidationError(path, "groups overlap");
        }
      }
      for (int s : seen)
        if (!s) throw ValidationError("reg.groups", "groups do not cover every coordinate");
    } else if (const auto* nu = std::get_if<reg::Nuclear>(&spec_)) {
      if (nu->m < 1 || nu->n < 1) throw ValidationError("reg.m", "matrix shape must be positive");
      if (!(nu->weight > 0.0) || !std::isfinite(nu->weight)) throw ValidationError("reg.weight", "must be positive");
    } else {
      const auto& p = std::get<reg::PolyhedralIndicator>(spec_);
      if (p.a.rows() != p.c.size()) throw ValidationError("reg.c", "length differs from rows of A");
      if (p.a.cols() < 1) throw ValidationError("reg.A", "needs at least one column");
      require_finite(p.a, "reg.A");
      require_finite(p.c, "reg.c");
      if (!polyhedron_nonempty(p)) throw ValidationError("reg", "polyhedron {y : A y <= c} is empty");
    }
  }

 private:
  static Vector gather(const Vector& y, const std::vector<Index>& grp) {
    Vector out(static_cast<Index>(grp.size()));
    for (size_t i = 0; i < grp.size(); ++i) out(static_cast<Index>(i)) = y(grp[i]);
    return out;
  }
  static void scatter(Vector& y, const std::vector<Index>& grp, const Vector& part) {
    for (size_t i = 0; i < grp.size(); ++i) y(grp[i]) = part(static_cast<Index>(i));
  }
  static Matrix rows_of(const std::vector<Vector>& rows, Index d) {
    Matrix m(static_cast<Index>(rows.size()), d);
    for (size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = rows[i].transpose();
    return m;
  }
  static Matrix cols_of(const std::vector<Vector>& cols, Index d) { return rows_of(cols, d).transpose(); }

  void check_dim(const Vector& y, const char* what) const {
    if (y.size() != dim()) throw ValidationError(what, "dimension mismatch with regularizer");
  }

  static Matrix active_rows(const reg::PolyhedralIndicator& p, const Vector& x, double tol) {
    std::vector<Vector> rows;
    for (Index i = 0; i < p.a.rows(); ++i)
      if (p.a.row(i).dot(x) >= p.c(i) - tol) rows.push_back(p.a.row(i).transpose());
    return rows_of(rows, p.a.cols());
  }

  /// Homogenized feasibility: some (y, tau) with a y <= c tau, tau > 0.
  static bool polyhedron_nonempty(const reg::PolyhedralIndicator& p) {
    const Index m = p.a.rows(), n = p.a.cols();
    if (m == 0) return true;
    Matrix ineq = Matrix::Zero(m + 1, n + 1);
    ineq.topLeftCorner(m, n) = p.a;
    ineq.topRightCorner(m, 1) = -p.c;
    ineq(m, n) = -1.0;
    Matrix f = Matrix::Zero(1, n + 1);
    f(0, n) = 1.0;
    const RaySearch rs = search_cone_image(ineq, Matrix(0, n + 1), f, Tolerances{}, 1e-9, 24);
    if (rs.status != RaySearch::limit) return rs.status == RaySearch::found;
    const Vector y = project_polyhedron(p.a, p.c, Vector::Zero(n));
    return (p.a * y - p.c).maxCoeff() <= 1e-9 * (1.0 + p.c.cwiseAbs().maxCoeff());
  }

  /// Face of {a y <= c} maximizing <y_bar, .>: {y : a y <= c, a_I y = c_I}
  /// with I the support of a nonnegative representation y_bar = a_I^T lam.
  static PolyhedralFace polyhedral_face(const reg::PolyhedralIndicator& p, const Vector& y_bar, const Tolerances& tol,
                                        const std::optional<Vector>& anchor) {
    const Index m = p.a.rows(), n = p.a.cols();
    std::vector<Index> support;
    if (anchor) {
      if (anchor->size() != n) throw ValidationError("anchor", "dimension mismatch");
      std::vector<Index> act;
      for (Index i = 0; i < m; ++i)
        if (p.a.row(i).dot(*anchor) >= p.c(i) - detail::act_tol(*anchor, tol)) act.push_back(i);
      Matrix at(n, static_cast<Index>(act.size()));
      for (size_t j = 0; j < act.size(); ++j) at.col(static_cast<Index>(j)) = p.a.row(act[j]).transpose();
      const Vector lam = nnls(at, y_bar);
      if ((at * lam - y_bar).norm() > detail::act_tol(y_bar, tol))
        throw ValidationError("y_bar", "not a normal vector of the polyhedron at the anchor");
      const double lam_tol = detail::act_tol(y_bar, tol);
      for (size_t j = 0; j < act.size(); ++j)
        if (lam(static_cast<Index>(j)) > lam_tol) support.push_back(act[j]);
    } else {
      support = dual_optimal_support(p, y_bar, tol);
    }
    Matrix e(static_cast<Index>(support.size()), n);
    Vector f(e.rows());
    for (size_t i = 0; i < support.size(); ++i) {
      e.row(static_cast<Index>(i)) = p.a.row(support[i]);
      f(static_cast<Index>(i)) = p.c(support[i]);
    }
    PolyhedralFace face{p.a, p.c, e, f};
    if (!anchor) {
      // Bounded iff the recession cone {d : a d <= 0, e d = 0} is {0}.
      const RaySearch rs = search_cone_image(p.a, e, Matrix::Identity(n, n), tol);
      if (rs.status != RaySearch::none) throw ValidationError("y_bar", "unbounded face");
    }
    return face;
  }

  /// Support of a minimizer of c^T lam over {a^T lam = y_bar, lam >= 0},
  /// by enumerating basic solutions.
  static std::vector<Index> dual_optimal_support(const reg::PolyhedralIndicator& p, const Vector& y_bar,
                                                 const Tolerances& tol) {
    const Index m = p.a.rows();
    if (y_bar.norm() <= tol.member) return {};
    if (m > 20) throw ValidationError("reg.A", "too many rows for face enumeration without an anchor");
    double best = std::numeric_limits<double>::infinity();
    std::vector<Index> best_support;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
      std::vector<Index> s;
      for (Index i = 0; i < m; ++i)
        if (mask & (1u << i)) s.push_back(i);
      Matrix at(p.a.cols(), static_cast<Index>(s.size()));
      for (size_t j = 0; j < s.size(); ++j) at.col(static_cast<Index>(j)) = p.a.row(s[j]).transpose();
      if (numerical_rank(svd(at).sigma, tol.rank) != at.cols()) continue;
      const Vector lam = at.colPivHouseholderQr().solve(y_bar);
      if ((at * lam - y_bar).norm() > tol.member * (1.0 + y_bar.norm()) || lam.minCoeff() < -tol.member) continue;
      double val = 0.0;
      for (size_t j = 0; j < s.size(); ++j) val += lam(static_cast<Index>(j)) * p.c(s[j]);
      if (val < best - 1e-12) {
        best = val;
        best_support.clear();
        for (size_t j = 0; j < s.size(); ++j)
          if (lam(static_cast<Index>(j)) > tol.member) best_support.push_back(s[j]);
      }
    }
    if (!std::isfinite(best)) throw ValidationError("y_bar", "outside the domain of the support function");
    return best_support;
  }

  /// Tangent of {U [wI 0; 0 wW] V^T : ||W|| <= 1} at y_bar, for the cases
  /// ||W_bar|| < 1 (the whole W-block) and one unit singular value (a half-space).
  static ConeDescription nuclear_tangent_subdiff(const reg::Nuclear& nu, const Vector& x_bar, const Vector& y_bar,
                                                 const Tolerances& tol) {
    const Index m = nu.m, n = nu.n, d = m * n;
    const SvdResult sx = svd(unvec(x_bar, m, n));
    Index r = 0;
    while (r < sx.sigma.size() && sx.sigma(r) > detail::act_tol(x_bar, tol)) ++r;
    const Matrix uperp = sx.u.rightCols(m - r), vperp = sx.v.rightCols(n - r);
    const Matrix wbar = uperp.transpose() * unvec(y_bar, m, n) * vperp / nu.weight;
    Matrix gens(d, (m - r) * (n - r));
    Index col = 0;
    for (Index i = 0; i < m - r; ++i)
      for (Index j = 0; j < n - r; ++j) gens.col(col++) = vec(uperp.col(i) * vperp.col(j).transpose());
    const Subspace block = span_of(d, gens, tol);
    const SvdResult sw = svd(wbar);
    Index s = 0;
    while (s < sw.sigma.size() && sw.sigma(s) >= 1.0 - tol.member) ++s;
    if (s == 0) return ConeDescription::span(block);
    if (s >= 2)
      return ConeDescription::unsupported(d, "nuclear subdifferential tangent with repeated unit singular values");
    const Vector g = vec((uperp * sw.u.col(0)) * (vperp * sw.v.col(0)).transpose());
    return ConeDescription::polyhedral(d, g.transpose(), detail::complement_rows(block, tol));
  }

  Spec spec_ = reg::GroupLasso{1, {{0}}, 1.0};
};

}  // namespace isocalm
