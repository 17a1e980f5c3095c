#pragma once

#include <optional>
#include <string>

#include "isocalm/solver.hpp"

namespace isocalm {

struct Conclusion {
  enum Kind { isolated_calm, not_isolated_calm, inconclusive } kind = inconclusive;
  Vector witness;
  /// "x" when the witness lives in X, "y" for an SRCQ witness in Y.
  std::string witness_space;
  std::string reason;
};

inline const char* to_string(Conclusion::Kind k) {
  switch (k) {
    case Conclusion::isolated_calm: return "IsolatedCalm";
    case Conclusion::not_isolated_calm: return "NotIsolatedCalm";
    default: return "Inconclusive";
  }
}

struct PdConditions {
  Tri i = Tri::unknown, ii = Tri::unknown, iii = Tri::unknown;
};

struct CertificateReport {
  Vector x_bar, v_bar, y_used;
  /// Set when the multiplier was adjusted before certification.
  bool y_refined = false;
  TrivialityVerdict cond_suf, cond_nes;
  bool qual_polyhedral = false;
  Tri qual_ri = Tri::unknown;
  std::optional<TrivialityVerdict> srcq;
  std::optional<PdConditions> pd_conditions;
  QgcFlags qgc;
  Conclusion conclusion_solution_map;
  std::optional<Conclusion> conclusion_primal_dual;
  std::vector<std::string> notes;
};

namespace cert_detail {

inline Tri tri_of(const TrivialityVerdict& v) {
  if (v.is_trivial()) return Tri::yes;
  if (v.is_nontrivial()) return Tri::no;
  return Tri::unknown;
}

inline Tri tri_and(Tri a, Tri b) {
  if (a == Tri::no || b == Tri::no) return Tri::no;
  if (a == Tri::yes && b == Tri::yes) return Tri::yes;
  return Tri::unknown;
}

/// Returns the multiplier used for certification, refining it when K^T y
/// misses v_bar by a small margin and rejecting it beyond that.
inline Vector checked_multiplier(const ProblemInstance& inst, const Vector& x, const Vector& y, const Vector& v_bar,
                                 bool& refined) {
  const double scale = 1.0 + inst.b.norm();
  const double tol = inst.tol.kkt * scale;
  const KktReport r = kkt_residual(inst, x, y);
  refined = false;
  if (r.stationarity <= tol && r.graph <= 100.0 * tol) return y;
  if (r.stationarity > 100.0 * tol || r.graph > 100.0 * tol)
    throw Error("KKT precondition failed: stationarity " + std::to_string(r.stationarity) + ", graph " +
                std::to_string(r.graph) + " (limit " + std::to_string(100.0 * tol) + ")");
  // Least-squares correction onto {y : K^T y = v}, then one step back toward
  // the subdifferential at K x.
  const Matrix k = inst.k_matrix();
  const Vector kx = k * x;
  Vector yc = y - k.transpose().completeOrthogonalDecomposition().solve(Vector(k.transpose() * y - v_bar));
  yc = (kx + yc) - inst.reg.prox(1.0, kx + yc);
  const KktReport rc = kkt_residual(inst, x, yc);
  if (rc.stationarity > tol || rc.graph > 100.0 * tol)
    throw Error("multiplier recovery failed: no y with K^T y = v_bar within tolerance");
  refined = true;
  return yc;
}

inline Conclusion solution_map_conclusion(const CertificateReport& r) {
  Conclusion c;
  const bool qualified = r.qual_polyhedral || r.qual_ri == Tri::yes;
  if (r.cond_nes.is_nontrivial()) {
    c.kind = Conclusion::not_isolated_calm;
    c.witness = r.cond_nes.witness;
    c.witness_space = "x";
    return c;
  }
  if (r.cond_suf.is_trivial() && r.qgc.primal_qgc) {
    c.kind = Conclusion::isolated_calm;
    return c;
  }
  if (qualified && r.cond_suf.is_nontrivial()) {
    c.kind = Conclusion::not_isolated_calm;
    c.witness = r.cond_suf.witness;
    c.witness_space = "x";
    return c;
  }
  if (r.cond_suf.is_unknown()) c.reason = "sufficient condition undecided: " + r.cond_suf.reason;
  else if (r.cond_suf.is_nontrivial()) c.reason = "sufficient condition fails but no qualification holds";
  else c.reason = "primal quadratic growth not available";
  if (r.cond_nes.is_unknown()) c.reason += "; necessary condition undecided: " + r.cond_nes.reason;
  return c;
}

}  // namespace cert_detail

/// Kernel/tangent-cone certificate for isolated calmness of the solution map
/// at pair.x_bar, using pair.y_bar as the multiplier.
inline CertificateReport certify_solution_map(const ProblemInstance& inst, const SolutionPair& pair,
                                              std::uint64_t seed = 0) {
  inst.validate();
  const Tolerances& tol = inst.tol;
  CertificateReport r;
  r.x_bar = pair.x_bar;
  r.v_bar = compute_v_bar(inst, pair.x_bar);
  r.y_used = cert_detail::checked_multiplier(inst, pair.x_bar, pair.y_bar, r.v_bar, r.y_refined);
  if (r.y_refined) r.notes.push_back("multiplier refined by least-squares correction");
  r.qgc = inst.reg.qgc_flags();

  const Matrix k = inst.k_matrix();
  const Vector kx = k * r.x_bar;
  const Subspace ker_phi = null_space(inst.phi_matrix(), tol);

  const FaceDescription face = inst.reg.conj_subdiff_face(r.y_used, tol, kx);
  r.qual_polyhedral = face.polyhedral();
  r.qual_ri = inst.reg.ri_intersects_range(r.y_used, k, kx, tol);

  const ConeDescription t_suf = inst.reg.tangent_conj_subdiff(r.y_used, kx, tol);
  r.cond_suf = trivial_intersection(ker_phi, preimage(inst.k, t_suf, tol), tol, seed);
  const ConeDescription t_nes = tangent_with_range_restriction(face, kx, k, tol);
  r.cond_nes = trivial_intersection(ker_phi, preimage(inst.k, t_nes, tol), tol, seed);
  if (!r.cond_suf.exact || !r.cond_nes.exact) r.notes.push_back("PSD heuristic used");

  if ((r.qual_polyhedral || r.qual_ri == Tri::yes) && !r.cond_suf.is_unknown() && !r.cond_nes.is_unknown() &&
      r.cond_suf.outcome != r.cond_nes.outcome)
    throw Error("internal error: qualified instance with disagreeing necessary and sufficient verdicts");
  r.conclusion_solution_map = cert_detail::solution_map_conclusion(r);
  return r;
}

/// Adds SRCQ and the primal-dual conditions to the solution-map certificate.
inline CertificateReport certify_primal_dual(const ProblemInstance& inst, const SolutionPair& pair,
                                             std::uint64_t seed = 0) {
  CertificateReport r = certify_solution_map(inst, pair, seed);
  const Tolerances& tol = inst.tol;
  const Matrix k = inst.k_matrix();
  const Vector kx = k * r.x_bar;
  const Subspace ker_kt = null_space(k.transpose(), tol);

  r.srcq = trivial_intersection(ker_kt, inst.reg.tangent_subdiff(kx, r.y_used, tol), tol, seed);

  PdConditions pd;
  if (ker_kt.is_zero()) {
    pd.iii = Tri::yes;
  } else {
    const auto normal = polar(inst.reg.tangent_conj_subdiff(r.y_used, kx, tol), tol);
    pd.iii = normal ? cert_detail::tri_of(trivial_intersection(ker_kt, *normal, tol, seed)) : Tri::unknown;
  }
  const Tri srcq = cert_detail::tri_of(*r.srcq);
  pd.i = cert_detail::tri_and(r.qual_polyhedral ? Tri::yes : Tri::no, srcq);
  // (iii) implies (ii).
  pd.ii = pd.iii == Tri::yes ? Tri::yes : cert_detail::tri_and(r.qual_ri, srcq);
  r.pd_conditions = pd;

  Conclusion c;
  if (r.srcq->is_nontrivial()) {
    c.kind = Conclusion::not_isolated_calm;
    c.witness = r.srcq->witness;
    c.witness_space = "y";
  } else if (r.cond_suf.is_nontrivial()) {
    c.kind = Conclusion::not_isolated_calm;
    c.witness = r.cond_suf.witness;
    c.witness_space = "x";
  } else if (r.srcq->is_trivial() && r.cond_suf.is_trivial() && r.qgc.primal_qgc && r.qgc.dual_qgc) {
    c.kind = Conclusion::isolated_calm;
  } else {
    c.reason = r.srcq->is_unknown() ? "SRCQ undecided: " + r.srcq->reason
                                    : "sufficient condition undecided: " + r.cond_suf.reason;
  }
  r.conclusion_primal_dual = c;
  return r;
}

struct StrongSolutionVerdict {
  enum Kind { strong, not_strong, unknown } kind = unknown;
  Vector witness;
  std::string reason;
};

inline const char* to_string(StrongSolutionVerdict::Kind k) {
  switch (k) {
    case StrongSolutionVerdict::strong: return "strong solution";
    case StrongSolutionVerdict::not_strong: return "not a strong solution";
    default: return "unknown";
  }
}

/// For K = identity, the sufficient-condition verdict read as a strong
/// (second-order) minimum test.
inline StrongSolutionVerdict strong_solution_equivalence(const ProblemInstance& inst, const SolutionPair& pair) {
  if (!inst.k.is_identity()) throw ValidationError("k", "strong-solution equivalence requires K = identity");
  if (!inst.reg.qgc_flags().primal_qgc) throw ValidationError("reg", "primal quadratic growth required");
  const CertificateReport r = certify_solution_map(inst, pair);
  StrongSolutionVerdict v;
  if (r.cond_suf.is_trivial()) v.kind = StrongSolutionVerdict::strong;
  else if (r.cond_suf.is_nontrivial()) {
    v.kind = StrongSolutionVerdict::not_strong;
    v.witness = r.cond_suf.witness;
  } else {
    v.reason = r.cond_suf.reason;
  }
  return v;
}

// ------------------------------------------------------- uniqueness oracle

struct UniquenessCheck {
  bool oracle_unique = false;
  Conclusion::Kind certificate = Conclusion::inconclusive;
  /// Meaningful only when the certificate is decisive.
  bool agrees = false;
  bool decisive = false;
  std::string detail;
};

namespace cert_detail {

/// Enumerates basic solutions of {z >= 0, a z = r}: vertices (returned in
/// `vertices`) and extreme rays of {z >= 0, a z = 0} (in `rays`).
inline void standard_form_skeleton(const Matrix& a, const Vector& r, double tol, std::vector<Vector>& vertices,
                                   std::vector<Vector>& rays) {
  const Index n = a.cols();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Index> cols;
    for (Index j = 0; j < n; ++j)
      if (mask >> j & 1u) cols.push_back(j);
    const Index k = static_cast<Index>(cols.size());
    if (k > a.rows() + 1) continue;
    Matrix sub(a.rows(), k);
    for (Index j = 0; j < k; ++j) sub.col(j) = a.col(cols[static_cast<size_t>(j)]);
    const Eigen::FullPivLU<Matrix> lu(sub);
    const Index rank = lu.rank();
    auto lift = [&](const Vector& part) {
      Vector z = Vector::Zero(n);
      for (size_t j = 0; j < cols.size(); ++j) z(cols[j]) = part(static_cast<Index>(j));
      return z;
    };
    if (rank == k) {
      const Vector part = lu.solve(r);
      if ((sub * part - r).norm() <= tol * (1.0 + r.norm()) && part.minCoeff() > tol) vertices.push_back(lift(part));
    } else if (rank == k - 1) {
      Vector part = lu.kernel().col(0);
      if (part.maxCoeff() <= 0.0) part = -part;
      if (part.minCoeff() > tol * part.norm()) rays.push_back(lift(part / part.norm()));
    }
  }
}

}  // namespace cert_detail

/// Brute-force uniqueness decision for group-Lasso instances, compared with
/// the certificate. Every solution x has phi x = phi x_bar and K x in the
/// face of the multiplier: groups with |y_J| < w vanish, boundary groups
/// are nonnegative multiples of y_J. The solution set is therefore the
/// projection of a standard-form polyhedron in (x+, x-, alpha) whose
/// vertices and extreme rays are enumerated by support patterns.
inline UniquenessCheck uniqueness_equivalence_check(const ProblemInstance& inst, const SolutionPair& pair,
                                                    Index oracle_budget = 8) {
  const auto* gl = std::get_if<reg::GroupLasso>(&inst.reg.spec());
  if (!gl) throw ValidationError("reg", "uniqueness oracle requires a group_lasso regularizer");
  const Index n = inst.dim_x();
  if (n > oracle_budget) throw Error("oracle budget exceeded: dim X = " + std::to_string(n));

  const CertificateReport cert = certify_solution_map(inst, pair);
  const Vector& y = cert.y_used;
  const Matrix phi = inst.phi_matrix(), k = inst.k_matrix();
  const double tol = inst.tol.member;

  std::vector<Vector> dirs;
  for (const auto& grp : gl->groups) {
    double nr = 0.0;
    for (Index i : grp) nr += y(i) * y(i);
    nr = std::sqrt(nr);
    if (std::abs(nr / gl->weight - 1.0) <= tol) {
      Vector d = Vector::Zero(k.rows());
      for (Index i : grp) d(i) = y(i) / nr;
      dirs.push_back(d);
    }
  }
  const Index na = static_cast<Index>(dirs.size());
  const Index rows = phi.rows() + k.rows();
  Matrix a = Matrix::Zero(rows, 2 * n + na);
  Vector rhs = Vector::Zero(rows);
  a.block(0, 0, phi.rows(), n) = phi;
  a.block(0, n, phi.rows(), n) = -phi;
  rhs.head(phi.rows()) = phi * pair.x_bar;
  a.block(phi.rows(), 0, k.rows(), n) = k;
  a.block(phi.rows(), n, k.rows(), n) = -k;
  for (Index j = 0; j < na; ++j) a.block(phi.rows(), 2 * n + j, k.rows(), 1) = -dirs[static_cast<size_t>(j)];

  std::vector<Vector> vertices, rays;
  cert_detail::standard_form_skeleton(a, rhs, 1e-9, vertices, rays);

  UniquenessCheck out;
  bool unique = true;
  for (const Vector& r : rays)
    if ((r.head(n) - r.segment(n, n)).norm() > 1e-7) unique = false;
  std::vector<Vector> xs;
  for (const Vector& v : vertices) {
    const Vector x = v.head(n) - v.segment(n, n);
    bool seen = false;
    for (const Vector& s : xs) seen = seen || (s - x).norm() <= 1e-6 * (1.0 + x.norm());
    if (!seen) xs.push_back(x);
  }
  if (xs.size() > 1) unique = false;
  out.oracle_unique = unique;
  out.certificate = cert.conclusion_solution_map.kind;
  out.decisive = out.certificate != Conclusion::inconclusive;
  out.agrees = out.decisive && (unique == (out.certificate == Conclusion::isolated_calm));
  out.detail = std::to_string(xs.size()) + " distinct vertices, " + std::to_string(rays.size()) + " extreme rays";
  return out;
}

}  // namespace isocalm
