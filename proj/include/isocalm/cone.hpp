#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "isocalm/face.hpp"
#include "isocalm/linalg.hpp"
#include "isocalm/operators.hpp"

namespace isocalm {

struct ConeDescription;

namespace cone {
/// A linear subspace viewed as a cone.
struct Span {
  Subspace s;
};
/// span + cone(rays); rays are unit columns.
struct SubspacePlusRays {
  Subspace span;
  Matrix rays;
};
/// {w : a w <= 0, e w = 0}.
struct PolyhedralIneq {
  Index n = 0;
  Matrix a;
  Matrix e;
};
/// {u H v^T : H symmetric, kernel^T H kernel PSD} in R^{m x n}, vec row-major.
struct PsdEmbedded {
  Matrix u, v;
  Matrix kernel;  // p x q
  Index m = 0, n = 0;
};
struct Product {
  std::vector<ConeDescription> parts;
};
/// {w : k w in inner}.
struct Preimage {
  Matrix k;
  std::shared_ptr<const ConeDescription> inner;
};
/// A cone the calculus cannot describe; every decision on it is Unknown.
struct Unsupported {
  Index n = 0;
  std::string reason;
};
}  // namespace cone

struct ConeDescription {
  using Node = std::variant<cone::Span, cone::SubspacePlusRays, cone::PolyhedralIneq, cone::PsdEmbedded,
                            cone::Product, cone::Preimage, cone::Unsupported>;
  Node node;

  ConeDescription() : node(cone::Span{Subspace::zero(0)}) {}
  ConeDescription(Node n) : node(std::move(n)) {}

  static ConeDescription span(Subspace s) { return {cone::Span{std::move(s)}}; }
  static ConeDescription zero(Index n) { return span(Subspace::zero(n)); }
  static ConeDescription full(Index n) { return span(Subspace::full(n)); }
  static ConeDescription unsupported(Index n, std::string why) { return {cone::Unsupported{n, std::move(why)}}; }

  /// span + cone(rays), rays given as columns (normalized here).
  static ConeDescription rays(Subspace s, Matrix r) {
    for (Index j = 0; j < r.cols(); ++j) {
      const double nr = r.col(j).norm();
      if (nr == 0.0) throw ValidationError("rays", "zero ray");
      r.col(j) /= nr;
    }
    return {cone::SubspacePlusRays{std::move(s), std::move(r)}};
  }

  static ConeDescription polyhedral(Index n, Matrix a, Matrix e) {
    if (a.rows() == 0) a.resize(0, n);
    if (e.rows() == 0) e.resize(0, n);
    for (Index i = 0; i < a.rows(); ++i) {
      const double nr = a.row(i).norm();
      if (nr > 0.0) a.row(i) /= nr;
    }
    return {cone::PolyhedralIneq{n, std::move(a), std::move(e)}};
  }

  static ConeDescription product(std::vector<ConeDescription> parts) { return {cone::Product{std::move(parts)}}; }

  Index ambient() const;
  std::string kind_name() const;
};

inline Index ConeDescription::ambient() const {
  return std::visit(
      [](const auto& c) -> Index {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, cone::Span>) return c.s.ambient_dim;
        else if constexpr (std::is_same_v<T, cone::SubspacePlusRays>) return c.span.ambient_dim;
        else if constexpr (std::is_same_v<T, cone::PolyhedralIneq>) return c.n;
        else if constexpr (std::is_same_v<T, cone::PsdEmbedded>) return c.m * c.n;
        else if constexpr (std::is_same_v<T, cone::Product>) {
          Index s = 0;
          for (const auto& p : c.parts) s += p.ambient();
          return s;
        } else if constexpr (std::is_same_v<T, cone::Preimage>) return c.k.cols();
        else return c.n;
      },
      node);
}

inline std::string ConeDescription::kind_name() const {
  static const char* names[] = {"subspace", "subspace_plus_rays", "polyhedral", "psd_embedded",
                                "product",  "preimage",           "unsupported"};
  return names[node.index()];
}

// ---------------------------------------------------------------- membership

namespace detail {

/// Orthonormal basis of the embedded symmetric block {u H v^T : H = H^T}.
inline Subspace psd_block_span(const Matrix& u, const Matrix& v, Index m, Index n, const Tolerances& tol) {
  const Index p = u.cols();
  Matrix gens(m * n, p * (p + 1) / 2);
  Index col = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) {
      Matrix h = Matrix::Zero(p, p);
      h(i, j) = 1.0;
      h(j, i) = 1.0;
      gens.col(col++) = vec(u * h * v.transpose());
    }
  return span_of(m * n, gens, tol);
}

inline Matrix complement_rows(const Subspace& s, const Tolerances& tol) {
  return orthogonal_complement(s, tol).basis.transpose();
}

inline Vector psd_project(const cone::PsdEmbedded& c, const Vector& y) {
  const Matrix w = unvec(y, c.m, c.n);
  const Matrix h = c.u.transpose() * w * c.v;
  Matrix hs = 0.5 * (h + h.transpose());
  const Index p = hs.rows(), q = c.kernel.cols();
  if (q > 0) {
    // Basis [range complement | kernel] of R^p; only the kernel block is clipped.
    Matrix basis(p, p);
    Eigen::FullPivHouseholderQR<Matrix> qr(c.kernel);
    Matrix qfull = qr.matrixQ();
    basis << qfull.rightCols(p - q), c.kernel;
    Matrix hb = basis.transpose() * hs * basis;
    Eigen::SelfAdjointEigenSolver<Matrix> es(hb.bottomRightCorner(q, q));
    const Vector lam = es.eigenvalues().cwiseMax(0.0);
    hb.bottomRightCorner(q, q) = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    hs = basis * hb * basis.transpose();
  }
  return vec(c.u * hs * c.v.transpose());
}

}  // namespace detail

inline bool membership(const ConeDescription& c, const Vector& w, double tol) {
  if (w.size() != c.ambient()) throw ValidationError("membership", "dimension mismatch");
  return std::visit(
      [&](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, cone::Span>) {
          return k.s.residual(w) <= tol;
        } else if constexpr (std::is_same_v<T, cone::SubspacePlusRays>) {
          const Matrix q = k.span.complement_projector();
          const Vector target = q * w;
          if (k.rays.cols() == 0) return target.norm() <= tol;
          const Matrix qr = q * k.rays;
          const Vector lam = nnls(qr, target);
          return (qr * lam - target).norm() <= tol;
        } else if constexpr (std::is_same_v<T, cone::PolyhedralIneq>) {
          if (k.a.rows() > 0 && (k.a * w).maxCoeff() > tol) return false;
          return k.e.rows() == 0 || (k.e * w).norm() <= tol;
        } else if constexpr (std::is_same_v<T, cone::PsdEmbedded>) {
          const Matrix wm = unvec(w, k.m, k.n);
          const Matrix h = k.u.transpose() * wm * k.v;
          if ((wm - k.u * h * k.v.transpose()).norm() > tol) return false;
          if ((h - h.transpose()).norm() > tol) return false;
          if (k.kernel.cols() == 0) return true;
          const Matrix blk = k.kernel.transpose() * (0.5 * (h + h.transpose())) * k.kernel;
          Eigen::SelfAdjointEigenSolver<Matrix> es(blk);
          return es.eigenvalues().minCoeff() >= -tol;
        } else if constexpr (std::is_same_v<T, cone::Product>) {
          Index off = 0;
          for (const auto& part : k.parts) {
            const Index d = part.ambient();
            if (!membership(part, w.segment(off, d), tol)) return false;
            off += d;
          }
          return true;
        } else if constexpr (std::is_same_v<T, cone::Preimage>) {
          return membership(*k.inner, k.k * w, tol);
        } else {
          throw Error("membership undefined for unsupported cone: " + k.reason);
        }
      },
      c.node);
}

// ------------------------------------------------------ simplify / preimage

/// Collapses descriptions that are really subspaces into Span nodes.
inline ConeDescription simplify(const ConeDescription& c, const Tolerances& tol) {
  return std::visit(
      [&](const auto& k) -> ConeDescription {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, cone::SubspacePlusRays>) {
          if (k.rays.cols() == 0) return ConeDescription::span(k.span);
          return c;
        } else if constexpr (std::is_same_v<T, cone::PolyhedralIneq>) {
          if (k.a.rows() == 0) return ConeDescription::span(null_space(k.e, tol));
          return c;
        } else if constexpr (std::is_same_v<T, cone::PsdEmbedded>) {
          if (k.kernel.cols() == 0) return ConeDescription::span(detail::psd_block_span(k.u, k.v, k.m, k.n, tol));
          return c;
        } else if constexpr (std::is_same_v<T, cone::Product>) {
          std::vector<ConeDescription> parts;
          bool all_span = true;
          Index total = 0, dims = 0;
          for (const auto& p : k.parts) {
            parts.push_back(simplify(p, tol));
            const auto* s = std::get_if<cone::Span>(&parts.back().node);
            if (!s) all_span = false;
            else dims += s->s.dim();
            total += parts.back().ambient();
          }
          if (!all_span) return ConeDescription::product(std::move(parts));
          Matrix basis = Matrix::Zero(total, dims);
          Index off = 0, col = 0;
          for (const auto& p : parts) {
            const auto& s = std::get<cone::Span>(p.node).s;
            basis.block(off, col, s.ambient_dim, s.dim()) = s.basis;
            off += s.ambient_dim;
            col += s.dim();
          }
          return ConeDescription::span(Subspace(total, basis));
        } else if constexpr (std::is_same_v<T, cone::Preimage>) {
          ConeDescription inner = simplify(*k.inner, tol);
          if (const auto* s = std::get_if<cone::Span>(&inner.node)) {
            if (s->s.is_full()) return ConeDescription::full(k.k.cols());
            return ConeDescription::span(null_space(s->s.complement_projector() * k.k, tol));
          }
          return {cone::Preimage{k.k, std::make_shared<const ConeDescription>(std::move(inner))}};
        } else {
          return c;
        }
      },
      c.node);
}

/// {w : k w in c}; subspaces are resolved immediately.
inline ConeDescription preimage(const Matrix& k, const ConeDescription& c, const Tolerances& tol) {
  if (k.rows() != c.ambient()) throw ValidationError("preimage", "operator rows differ from cone dimension");
  return simplify(ConeDescription{cone::Preimage{k, std::make_shared<const ConeDescription>(c)}}, tol);
}

inline ConeDescription preimage(const LinearOp& k, const ConeDescription& c, const Tolerances& tol) {
  if (k.is_identity()) {
    if (k.rows() != c.ambient()) throw ValidationError("preimage", "operator rows differ from cone dimension");
    return c;
  }
  return preimage(k.materialize(), c, tol);
}

/// Polar cone when it has a finite description (subspaces, rays, polyhedra).
inline std::optional<ConeDescription> polar(const ConeDescription& c, const Tolerances& tol) {
  return std::visit(
      [&](const auto& k) -> std::optional<ConeDescription> {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, cone::Span>) {
          return ConeDescription::span(orthogonal_complement(k.s, tol));
        } else if constexpr (std::is_same_v<T, cone::SubspacePlusRays>) {
          return ConeDescription::polyhedral(k.span.ambient_dim, k.rays.transpose(), k.span.basis.transpose());
        } else if constexpr (std::is_same_v<T, cone::PolyhedralIneq>) {
          const Subspace s = span_of(k.n, k.e.transpose(), tol);
          Matrix r = k.a.transpose();
          std::vector<Index> keep;
          for (Index j = 0; j < r.cols(); ++j)
            if (r.col(j).norm() > 0.0) keep.push_back(j);
          Matrix rk(k.n, static_cast<Index>(keep.size()));
          for (size_t j = 0; j < keep.size(); ++j) rk.col(static_cast<Index>(j)) = r.col(keep[j]);
          return ConeDescription::rays(s, rk);
        } else if constexpr (std::is_same_v<T, cone::Product>) {
          std::vector<ConeDescription> parts;
          for (const auto& p : k.parts) {
            auto q = polar(p, tol);
            if (!q) return std::nullopt;
            parts.push_back(std::move(*q));
          }
          return ConeDescription::product(std::move(parts));
        } else {
          return std::nullopt;
        }
      },
      c.node);
}

// ------------------------------------------------------- lifted H-form

namespace detail {

/// C = {w : exists lam, ineq [w; lam] <= 0, eq [w; lam] = 0}.
struct Lifted {
  enum Status { ok, needs_psd, unsupported } status = ok;
  Index n = 0, extra = 0;
  Matrix ineq, eq;
  std::string reason;
};

inline Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

inline Lifted lift(const ConeDescription& c, const Tolerances& tol) {
  Lifted out;
  out.n = c.ambient();
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        const Index n = out.n;
        if constexpr (std::is_same_v<T, cone::Span>) {
          out.eq = complement_rows(k.s, tol);
          out.ineq.resize(0, n);
        } else if constexpr (std::is_same_v<T, cone::SubspacePlusRays>) {
          // Q (w - R lam) = 0, lam >= 0, with Q the rows spanning span^perp.
          const Index r = k.rays.cols();
          const Matrix q = complement_rows(k.span, tol);
          out.extra = r;
          out.eq.resize(q.rows(), n + r);
          out.eq << q, -q * k.rays;
          out.ineq = Matrix::Zero(r, n + r);
          out.ineq.rightCols(r) = -Matrix::Identity(r, r);
        } else if constexpr (std::is_same_v<T, cone::PolyhedralIneq>) {
          out.ineq = k.a;
          out.eq = k.e;
        } else if constexpr (std::is_same_v<T, cone::PsdEmbedded>) {
          const Index q = k.kernel.cols();
          if (q >= 2) {
            out.status = Lifted::needs_psd;
            return;
          }
          out.eq = complement_rows(psd_block_span(k.u, k.v, k.m, k.n, tol), tol);
          out.ineq.resize(0, n);
          if (q == 1) {
            // p^T H p >= 0 is the linear functional <W, (u p)(v p)^T>.
            const Vector g = vec((k.u * k.kernel) * (k.v * k.kernel).transpose());
            out.ineq = -g.transpose() / g.norm();
          }
        } else if constexpr (std::is_same_v<T, cone::Product>) {
          std::vector<Lifted> sub;
          Index extra = 0;
          for (const auto& p : k.parts) {
            sub.push_back(lift(p, tol));
            if (sub.back().status != Lifted::ok) {
              out.status = sub.back().status;
              out.reason = sub.back().reason;
              return;
            }
            extra += sub.back().extra;
          }
          out.extra = extra;
          out.ineq.resize(0, n + extra);
          out.eq.resize(0, n + extra);
          Index off = 0, eoff = n;
          for (const auto& s : sub) {
            Matrix bi = Matrix::Zero(s.ineq.rows(), n + extra), be = Matrix::Zero(s.eq.rows(), n + extra);
            bi.block(0, off, s.ineq.rows(), s.n) = s.ineq.leftCols(s.n);
            bi.block(0, eoff, s.ineq.rows(), s.extra) = s.ineq.rightCols(s.extra);
            be.block(0, off, s.eq.rows(), s.n) = s.eq.leftCols(s.n);
            be.block(0, eoff, s.eq.rows(), s.extra) = s.eq.rightCols(s.extra);
            out.ineq = vstack(out.ineq, bi);
            out.eq = vstack(out.eq, be);
            off += s.n;
            eoff += s.extra;
          }
        } else if constexpr (std::is_same_v<T, cone::Preimage>) {
          const Lifted in = lift(*k.inner, tol);
          if (in.status != Lifted::ok) {
            out.status = in.status;
            out.reason = in.reason;
            return;
          }
          out.extra = in.extra;
          auto subst = [&](const Matrix& m) {
            Matrix r(m.rows(), n + in.extra);
            r.leftCols(n) = m.leftCols(in.n) * k.k;
            r.rightCols(in.extra) = m.rightCols(in.extra);
            return r;
          };
          out.ineq = subst(in.ineq);
          out.eq = subst(in.eq);
        } else {
          out.status = Lifted::unsupported;
          out.reason = k.reason;
        }
      },
      c.node);
  return out;
}

/// Drops zero rows, normalizes the rest and removes duplicates.
inline Matrix clean_rows(const Matrix& m, double zero_tol) {
  std::vector<Vector> rows;
  for (Index i = 0; i < m.rows(); ++i) {
    const double nr = m.row(i).norm();
    if (nr <= zero_tol) continue;
    Vector r = m.row(i).transpose() / nr;
    bool dup = false;
    for (const auto& o : rows)
      if ((o - r).norm() <= 1e-12) dup = true;
    if (!dup) rows.push_back(r);
  }
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = rows[i].transpose();
  return out;
}

}  // namespace detail

/// Outcome of searching {u : ineq u <= 0, eq u = 0} for a point with f u != 0.
struct RaySearch {
  enum Status { found, none, limit } status = none;
  Vector u;
};

/// Exact decision by extreme-ray enumeration: the cone splits into its
/// lineality space and a pointed part, and f vanishes on the cone iff it
/// vanishes on the lineality space and on every extreme ray of the pointed
/// part. Each extreme ray is the 1-D null space of d-1 independent rows.
inline RaySearch search_cone_image(const Matrix& ineq, const Matrix& eq, const Matrix& f, const Tolerances& tol,
                                   double nz_tol = 1e-6, Index max_rows = 20) {
  const Index dim = std::max(ineq.cols(), eq.cols());
  RaySearch res;
  const Subspace z0 = eq.rows() > 0 ? null_space(eq, tol) : Subspace::full(dim);
  if (z0.is_zero()) return res;
  const Matrix fz = f * z0.basis;
  const Matrix mz = ineq.rows() > 0 ? detail::clean_rows(ineq * z0.basis, 1e-12) : Matrix(0, z0.dim());

  const Subspace lin = mz.rows() > 0 ? null_space(mz, tol) : Subspace::full(z0.dim());
  if (!lin.is_zero()) {
    const Matrix fl = fz * lin.basis;
    if (fl.size() > 0) {
      const SvdResult s = svd(fl);
      if (s.sigma.size() > 0 && s.sigma(0) > nz_tol) {
        res.status = RaySearch::found;
        res.u = z0.basis * (lin.basis * s.v.col(0));
        return res;
      }
    }
  }
  const Subspace rest = orthogonal_complement(lin, tol);
  const Index d = rest.dim();
  if (d == 0) return res;
  const Matrix m = detail::clean_rows(mz * rest.basis, 1e-12);
  const Matrix fr = fz * rest.basis;
  const Index rows = m.rows();
  if (rows > max_rows) {
    res.status = RaySearch::limit;
    return res;
  }
  const double feas = 1e-2 * tol.member;

  auto try_ray = [&](const Vector& r) -> bool {
    for (double sgn : {1.0, -1.0}) {
      const Vector rr = sgn * r;
      if (rows > 0 && (m * rr).maxCoeff() > feas) continue;
      if ((fr * rr).norm() > nz_tol) {
        res.status = RaySearch::found;
        res.u = z0.basis * (rest.basis * rr);
        return true;
      }
    }
    return false;
  };

  if (d == 1) {
    try_ray(Vector::Ones(1));
    return res;
  }
  const Index pick = d - 1;
  if (rows < pick) return res;
  std::vector<Index> idx(static_cast<size_t>(pick));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix sub(pick, d);
  while (true) {
    for (Index i = 0; i < pick; ++i) sub.row(i) = m.row(idx[static_cast<size_t>(i)]);
    const SvdResult s = svd(sub);
    if (numerical_rank(s.sigma, tol.rank) == pick && try_ray(s.v.col(d - 1))) return res;
    // next combination
    Index i = pick - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == rows - pick + i) --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (Index j = i + 1; j < pick; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
  return res;
}

// ------------------------------------------------------ triviality decision

struct TrivialityVerdict {
  enum Outcome { trivial, nontrivial, unknown } outcome = unknown;
  Vector witness;
  std::string reason;
  /// False when the verdict came from the PSD heuristic.
  bool exact = true;

  static TrivialityVerdict make_trivial() { return {trivial, Vector(), "", true}; }
  static TrivialityVerdict make_unknown(std::string why, bool exact = false) {
    return {unknown, Vector(), std::move(why), exact};
  }
  bool is_trivial() const { return outcome == trivial; }
  bool is_nontrivial() const { return outcome == nontrivial; }
  bool is_unknown() const { return outcome == unknown; }
};

inline const char* to_string(TrivialityVerdict::Outcome o) {
  switch (o) {
    case TrivialityVerdict::trivial: return "holds";
    case TrivialityVerdict::nontrivial: return "fails";
    default: return "unknown";
  }
}

namespace detail {

inline TrivialityVerdict checked_witness(const Subspace& n, const ConeDescription& c, Vector w,
                                         const Tolerances& tol, bool exact) {
  const double nr = w.norm();
  if (nr == 0.0) return TrivialityVerdict::make_unknown("zero witness", exact);
  w /= nr;
  if (w.cwiseAbs().maxCoeff() > 0.0) {
    // Fix the sign for reproducible output: first significant entry positive.
    Index i = 0;
    while (i < w.size() && std::abs(w(i)) <= 1e-12) ++i;
    if (i < w.size() && w(i) < 0.0 && membership(c, -w, 10.0 * tol.member)) w = -w;
  }
  if (n.residual(w) > 10.0 * tol.member || !membership(c, w, 10.0 * tol.member))
    return TrivialityVerdict::make_unknown("witness failed verification", exact);
  return {TrivialityVerdict::nontrivial, w, "", exact};
}

/// Extracts (k, psd) when c is a PSD-embedded cone, possibly behind one preimage.
inline std::optional<std::pair<Matrix, cone::PsdEmbedded>> psd_target(const ConeDescription& c) {
  if (const auto* p = std::get_if<cone::PsdEmbedded>(&c.node)) {
    const Index d = p->m * p->n;
    return std::make_pair(Matrix(Matrix::Identity(d, d)), *p);
  }
  if (const auto* pre = std::get_if<cone::Preimage>(&c.node))
    if (const auto* p = std::get_if<cone::PsdEmbedded>(&pre->inner->node)) return std::make_pair(pre->k, *p);
  return std::nullopt;
}

/// Alternating projections between the graph {(w, k w) : w in N} and
/// R^n x C from seeded random unit starts.
inline TrivialityVerdict psd_probe(const Subspace& n, const ConeDescription& c, const Tolerances& tol,
                                   std::uint64_t seed) {
  const auto target = psd_target(c);
  if (!target) return TrivialityVerdict::make_unknown("PSD cone inside a composite description");
  const auto& [k, psd] = *target;
  const Matrix nb = n.basis;
  const Matrix knb = k * nb;
  const Index d = nb.cols();
  const Matrix gram = Matrix::Identity(d, d) + knb.transpose() * knb;
  const Eigen::LLT<Matrix> chol(gram);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  constexpr int starts = 32, iters = 500, polish = 20000;

  auto step = [&](const Vector& z) {
    const Vector yp = detail::psd_project(psd, knb * z);
    return Vector(chol.solve(z + knb.transpose() * yp));
  };
  auto gap = [&](const Vector& z) {
    const Vector y = knb * z;
    return (y - detail::psd_project(psd, y)).norm();
  };

  for (int s = 0; s < starts; ++s) {
    Vector z(d);
    for (Index i = 0; i < d; ++i) z(i) = gauss(rng);
    z /= z.norm();
    for (int it = 0; it < iters; ++it) z = step(z);
    if (z.norm() < 0.5) continue;
    for (int it = 0; it < polish && gap(z) > 0.1 * tol.member * z.norm(); ++it) z = step(z);
    if (gap(z) > 0.1 * tol.member * z.norm()) continue;
    TrivialityVerdict v = checked_witness(n, c, nb * z, tol, false);
    if (v.is_nontrivial()) return v;
  }
  return TrivialityVerdict::make_unknown("PSD cone, heuristic inconclusive");
}

}  // namespace detail

/// Decides N ∩ C = {0}. Exact for every cone with a finite H-description;
/// PSD cones with a kernel block of size >= 2 go through the seeded probe.
inline TrivialityVerdict trivial_intersection(const Subspace& n, const ConeDescription& c, const Tolerances& tol,
                                              std::uint64_t seed = 0) {
  if (n.ambient_dim != c.ambient()) throw ValidationError("trivial_intersection", "dimension mismatch");
  if (n.is_zero()) return TrivialityVerdict::make_trivial();
  const ConeDescription cs = simplify(c, tol);
  if (const auto* s = std::get_if<cone::Span>(&cs.node)) {
    const Subspace meet = intersect_subspaces(n, s->s, tol);
    if (meet.is_zero()) return TrivialityVerdict::make_trivial();
    return detail::checked_witness(n, cs, meet.basis.col(0), tol, true);
  }
  const detail::Lifted lf = detail::lift(cs, tol);
  if (lf.status == detail::Lifted::unsupported) return TrivialityVerdict::make_unknown(lf.reason);
  if (lf.status == detail::Lifted::needs_psd) return detail::psd_probe(n, cs, tol, seed);

  const Index d = n.dim(), ex = lf.extra;
  auto restrict = [&](const Matrix& m) {
    Matrix r(m.rows(), d + ex);
    r.leftCols(d) = m.leftCols(lf.n) * n.basis;
    r.rightCols(ex) = m.rightCols(ex);
    return r;
  };
  Matrix f = Matrix::Zero(d, d + ex);
  f.leftCols(d) = Matrix::Identity(d, d);
  const RaySearch rs = search_cone_image(restrict(lf.ineq), restrict(lf.eq), f, tol);
  if (rs.status == RaySearch::limit) return TrivialityVerdict::make_unknown("combinatorial limit", true);
  if (rs.status == RaySearch::none) return TrivialityVerdict::make_trivial();
  return detail::checked_witness(n, cs, n.basis * rs.u.head(d), tol, true);
}

// ---------------------------------------------------------- face tangents

namespace detail {

inline double act_tol(const Vector& y0, const Tolerances& tol) { return tol.member * (1.0 + y0.norm()); }

inline void require_in_face(const FaceDescription& face, const Vector& y0, const Tolerances& tol) {
  if (y0.size() != face.ambient) throw ValidationError("face", "dimension mismatch");
  const double viol = face_violation(face, y0, tol);
  if (viol > act_tol(y0, tol))
    throw ValidationError("face", "point is not in the face (distance " + std::to_string(viol) + ")");
}

inline ConeDescription polyhedral_tangent(const PolyhedralFace& f, Index n, const Vector& y0, const Tolerances& tol) {
  std::vector<Index> act;
  for (Index i = 0; i < f.a.rows(); ++i)
    if (f.a.row(i).dot(y0) >= f.c(i) - act_tol(y0, tol)) act.push_back(i);
  Matrix a(static_cast<Index>(act.size()), n);
  for (size_t i = 0; i < act.size(); ++i) a.row(static_cast<Index>(i)) = f.a.row(act[i]);
  Matrix e = f.e.rows() > 0 ? f.e : Matrix(0, n);
  return simplify(ConeDescription::polyhedral(n, a, e), tol);
}

inline Matrix psd_kernel(const PsdFace& f, const Vector& y0, const Tolerances& tol) {
  const Matrix h = f.u.transpose() * unvec(y0, f.m, f.n) * f.v;
  const Matrix hs = 0.5 * (h + h.transpose());
  const EigResult er = sym_eig(hs, tol);
  Index q = 0;
  while (q < er.lambda.size() && er.lambda(er.lambda.size() - 1 - q) <= act_tol(y0, tol)) ++q;
  return er.q.rightCols(q);
}

}  // namespace detail

/// Tangent cone of the face at y0.
inline ConeDescription tangent_of_face(const FaceDescription& face, const Vector& y0, const Tolerances& tol) {
  detail::require_in_face(face, y0, tol);
  if (const auto* p = std::get_if<PolyhedralFace>(&face.set)) return detail::polyhedral_tangent(*p, face.ambient, y0, tol);
  const auto& f = std::get<PsdFace>(face.set);
  return simplify(ConeDescription{cone::PsdEmbedded{f.u, f.v, detail::psd_kernel(f, y0, tol), f.m, f.n}}, tol);
}

/// Tangent cone of face ∩ range(k) at y0.
inline ConeDescription tangent_with_range_restriction(const FaceDescription& face, const Vector& y0, const Matrix& k,
                                                      const Tolerances& tol) {
  detail::require_in_face(face, y0, tol);
  const Subspace range = range_space(k, tol);
  if (range.residual(y0) > detail::act_tol(y0, tol))
    throw ValidationError("face", "point is not in the range of the operator");
  if (range.is_full()) return tangent_of_face(face, y0, tol);
  const Matrix perp = detail::complement_rows(range, tol);
  if (const auto* p = std::get_if<PolyhedralFace>(&face.set)) {
    PolyhedralFace restricted = *p;
    restricted.e = detail::vstack(p->e.rows() > 0 ? p->e : Matrix(0, face.ambient), perp);
    restricted.f = restricted.e * y0;
    restricted.f.head(p->e.rows()) = p->f;
    return detail::polyhedral_tangent(restricted, face.ambient, y0, tol);
  }
  const auto& f = std::get<PsdFace>(face.set);
  if (detail::psd_kernel(f, y0, tol).cols() == 0) {
    // y0 in the relative interior: the tangent is the block span cut by the range.
    const Subspace block = detail::psd_block_span(f.u, f.v, f.m, f.n, tol);
    return ConeDescription::span(intersect_subspaces(block, range, tol));
  }
  return ConeDescription::unsupported(face.ambient, "PSD face with range restriction");
}

/// Whether range(k) meets the relative interior of a polyhedral face, decided
/// at the anchor y0 in face ∩ range(k): a constraint active at y0 that can be
/// strict inside the tangent cone must stay strict inside tangent ∩ range.
inline Tri polyhedral_ri_meets_range(const FaceDescription& face, const Vector& y0, const Matrix& k,
                                     const Tolerances& tol) {
  const auto& f = std::get<PolyhedralFace>(face.set);
  detail::require_in_face(face, y0, tol);
  const Index n = face.ambient;
  const Subspace range = range_space(k, tol);
  if (range.residual(y0) > detail::act_tol(y0, tol)) return Tri::no;
  std::vector<Index> act;
  for (Index i = 0; i < f.a.rows(); ++i)
    if (f.a.row(i).dot(y0) >= f.c(i) - detail::act_tol(y0, tol)) act.push_back(i);
  if (act.empty() || range.is_full()) return Tri::yes;
  Matrix a(static_cast<Index>(act.size()), n);
  for (size_t i = 0; i < act.size(); ++i) a.row(static_cast<Index>(i)) = f.a.row(act[i]);
  const Matrix e = f.e.rows() > 0 ? f.e : Matrix(0, n);
  const Matrix e_range = detail::vstack(e, detail::complement_rows(range, tol));
  bool limited = false;
  for (Index i = 0; i < a.rows(); ++i) {
    const Matrix fi = a.row(i);
    const RaySearch in_t = search_cone_image(a, e, fi, tol);
    if (in_t.status == RaySearch::limit) {
      limited = true;
      continue;
    }
    if (in_t.status == RaySearch::none) continue;  // implicit equality of the face
    const RaySearch in_tr = search_cone_image(a, e_range, fi, tol);
    if (in_tr.status == RaySearch::limit) limited = true;
    else if (in_tr.status == RaySearch::none) return Tri::no;
  }
  return limited ? Tri::unknown : Tri::yes;
}

}  // namespace isocalm
