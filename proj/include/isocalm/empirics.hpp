#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "isocalm/certificates.hpp"

namespace isocalm {

// ---------------------------------------------------------- sweeps

struct SweepSample {
  double radius = 0.0;
  double db_norm = 0.0;
  double dmu = 0.0;
  double x_dist = 0.0;
  double ratio = 0.0;
  long solver_iters = 0;
  /// "" for a regular sample, "nonlocal" or "solver_failed" otherwise.
  std::string flag;
};

struct KappaEstimate {
  std::vector<SweepSample> samples;
  std::vector<double> radii;
  /// NaN when every sample at that radius was flagged.
  std::vector<double> kappa_hat_per_radius;
  bool blowup_flag = false;
};

struct SweepConfig {
  std::vector<double> radii{1e-2, 1e-3, 1e-4};
  int n_per_radius = 20;
  std::uint64_t seed = 0;
  /// Size of the random offset added to the warm start, so that solution
  /// sets that are not singletons get explored.
  double warm_jitter = 0.05;
  SolverConfig solver;
};

namespace emp_detail {

inline Vector unit_gaussian(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Vector v(n);
  do {
    for (Index i = 0; i < n; ++i) v(i) = g(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

/// kappa_hat grows by 10x or more while the radius shrinks by 100x or more.
inline bool blowup(const std::vector<double>& radii, const std::vector<double>& kappa) {
  for (size_t i = 0; i < radii.size(); ++i)
    for (size_t j = 0; j < radii.size(); ++j)
      if (radii[j] * 100.0 <= radii[i] * (1.0 + 1e-12) && std::isfinite(kappa[i]) && std::isfinite(kappa[j]) &&
          kappa[j] > 0.0 && kappa[j] >= 10.0 * kappa[i])
        return true;
  return false;
}

}  // namespace emp_detail

/// Samples (db, dmu) on spheres of the given radii and records the
/// displacement ratio of warm-started re-solves. The same unit directions
/// are reused at every radius.
inline KappaEstimate perturbation_sweep(const ProblemInstance& inst, const SolutionPair& pair,
                                        const SweepConfig& cfg = {}) {
  inst.validate();
  if (cfg.radii.empty()) throw ValidationError("radii", "at least one radius required");
  for (double r : cfg.radii)
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("radii", "radii must be positive");
  if (cfg.n_per_radius < 1) throw ValidationError("samples", "must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  const Index m = inst.b.size(), n = inst.dim_x();
  std::vector<Vector> dirs, jitters;
  for (int s = 0; s < cfg.n_per_radius; ++s) {
    dirs.push_back(emp_detail::unit_gaussian(rng, m + 1));
    jitters.push_back(emp_detail::unit_gaussian(rng, n));
  }
  const double local = 0.1 * pair.x_bar.norm() + 0.1;

  KappaEstimate est;
  est.radii = cfg.radii;
  for (double r : cfg.radii) {
    double kappa = -1.0;
    for (int s = 0; s < cfg.n_per_radius; ++s) {
      const Vector& d = dirs[static_cast<size_t>(s)];
      SweepSample smp;
      smp.radius = r;
      Vector db = r * d.head(m);
      smp.dmu = std::max(r * d(m), -0.5 * inst.mu);
      smp.db_norm = db.norm();
      SolutionPair warm = pair;
      warm.x_bar = pair.x_bar + cfg.warm_jitter * jitters[static_cast<size_t>(s)];
      Vector x;
      try {
        const SolutionPair sol = solve_perturbed(inst, db, smp.dmu, warm, cfg.solver);
        x = sol.x_bar;
        smp.solver_iters = sol.iterations;
      } catch (const SolverError& e) {
        x = e.best().x_bar;
        smp.solver_iters = e.best().iterations;
        smp.flag = "solver_failed";
      }
      smp.x_dist = (x - pair.x_bar).norm();
      smp.ratio = smp.x_dist / (smp.db_norm + std::abs(smp.dmu));
      if (smp.flag.empty() && smp.x_dist > local) smp.flag = "nonlocal";
      if (smp.flag.empty()) kappa = std::max(kappa, smp.ratio);
      est.samples.push_back(smp);
    }
    est.kappa_hat_per_radius.push_back(kappa < 0.0 ? std::numeric_limits<double>::quiet_NaN() : kappa);
  }
  est.blowup_flag = emp_detail::blowup(est.radii, est.kappa_hat_per_radius);
  return est;
}

inline std::string sweep_csv(const KappaEstimate& k) {
  std::ostringstream os;
  os.precision(17);
  os << "radius,db_norm,dmu,x_dist,ratio,solver_iters,flag\n";
  for (const auto& s : k.samples)
    os << s.radius << ',' << s.db_norm << ',' << s.dmu << ',' << s.x_dist << ',' << s.ratio << ',' << s.solver_iters
       << ',' << s.flag << '\n';
  return os.str();
}

// ---------------------------------------------------------- instability probe

struct ProbeStep {
  double t = 0.0;
  Vector x_t;
  double x_dist = 0.0;
  double b_dist = 0.0;
  /// Infinite when b_t = b_bar.
  double ratio = 0.0;
  double stationarity = 0.0;
  double graph = 0.0;
  bool kkt_ok = false;
};

struct ProbeReport {
  enum Status { refuted, not_refuted, unknown } status = unknown;
  std::vector<ProbeStep> steps;
  double min_ratio = 0.0;
  /// The family only exists for t > 0 along the witness.
  bool one_sided = false;
  std::string reason;
};

inline const char* to_string(ProbeReport::Status s) {
  switch (s) {
    case ProbeReport::refuted: return "refuted";
    case ProbeReport::not_refuted: return "not_refuted";
    default: return "unknown";
  }
}

/// Builds x_t in the solution set of P(b_t, mu) with b_t - b_bar = phi (x_t - x_bar):
/// x_t is the projection of x_bar + t w onto K^{-1}(face of y_bar).
inline ProbeReport instability_probe(const ProblemInstance& inst, const SolutionPair& pair, const Vector& witness,
                                     const std::vector<double>& t_grid) {
  inst.validate();
  if (witness.size() != inst.dim_x()) throw ValidationError("witness", "dimension mismatch");
  if (witness.norm() == 0.0) throw ValidationError("witness", "must be nonzero");
  ProbeReport rep;
  const Tolerances& tol = inst.tol;
  const Matrix phi = inst.phi_matrix(), k = inst.k_matrix();
  const Vector kx = k * pair.x_bar;
  const FaceDescription face = inst.reg.conj_subdiff_face(pair.y_bar, tol, kx);
  const auto* pf = std::get_if<PolyhedralFace>(&face.set);
  if (!pf) {
    rep.reason = "projection onto a PSD face is not available";
    return rep;
  }
  // {x : a K x <= c, e K x = f}, equalities as two-sided inequalities.
  const Index na = pf->a.rows(), ne = pf->e.rows(), n = inst.dim_x();
  Matrix g(na + 2 * ne, n);
  Vector h(na + 2 * ne);
  if (na > 0) {
    g.topRows(na) = pf->a * k;
    h.head(na) = pf->c;
  }
  if (ne > 0) {
    g.middleRows(na, ne) = pf->e * k;
    g.bottomRows(ne) = -pf->e * k;
    h.segment(na, ne) = pf->f;
    h.tail(ne) = -pf->f;
  }
  const Vector w = witness / witness.norm();
  const double scale_phi = 1.0 + spectral_norm(phi) * (1.0 + pair.x_bar.norm());

  rep.min_ratio = std::numeric_limits<double>::infinity();
  bool all_ok = true;
  for (double t : t_grid) {
    if (!(t > 0.0)) throw ValidationError("t_grid", "entries must be positive");
    ProbeStep st;
    st.t = t;
    st.x_t = g.rows() > 0 ? project_polyhedron(g, h, Vector(pair.x_bar + t * w)) : Vector(pair.x_bar + t * w);
    st.x_dist = (st.x_t - pair.x_bar).norm();
    Vector db = phi * (st.x_t - pair.x_bar);
    if (db.norm() <= 64.0 * std::numeric_limits<double>::epsilon() * scale_phi) db.setZero();
    st.b_dist = db.norm();
    st.ratio = st.b_dist == 0.0 ? std::numeric_limits<double>::infinity() : st.x_dist / st.b_dist;
    ProblemInstance pt = inst;
    pt.b = inst.b + db;
    const KktReport r = kkt_residual(pt, st.x_t, pair.y_bar);
    st.stationarity = r.stationarity;
    st.graph = r.graph;
    st.kkt_ok = std::max(r.stationarity, r.graph) <= tol.kkt * (1.0 + pt.b.norm());
    all_ok = all_ok && st.kkt_ok && st.x_dist > 0.5 * t;
    rep.min_ratio = std::min(rep.min_ratio, st.ratio);
    rep.steps.push_back(st);
  }
  if (!t_grid.empty()) {
    const double t = t_grid.back();
    const Vector target = pair.x_bar - t * w;
    const Vector back = g.rows() > 0 ? project_polyhedron(g, h, target) : target;
    rep.one_sided = (back - target).norm() > 0.5 * t;
  }
  rep.status = all_ok && rep.min_ratio >= 1e6 ? ProbeReport::refuted : ProbeReport::not_refuted;
  if (rep.status == ProbeReport::not_refuted)
    rep.reason = all_ok ? "displacement ratios stay bounded" : "alternate points failed the KKT check";
  return rep;
}

// ---------------------------------------------------------- second subderivative

struct SubderivativeEstimate {
  std::vector<double> t;
  std::vector<double> raw;
  /// Minimum over the raw value and the perturbed-direction grid at the
  /// smallest t.
  double liminf = 0.0;
  bool grid_used = false;
};

/// [f(x + t w) - f(x) - t <v, w>] / (t^2 / 2) for each t.
inline std::vector<double> second_order_quotients(const std::function<double(const Vector&)>& f, const Vector& x,
                                                  const Vector& v, const Vector& w, const std::vector<double>& t_grid) {
  std::vector<double> q;
  const double fx = f(x);
  for (double t : t_grid) {
    const double ft = f(x + t * w);
    q.push_back(std::isinf(ft) ? std::numeric_limits<double>::infinity() : (ft - fx - t * v.dot(w)) / (0.5 * t * t));
  }
  return q;
}

inline SubderivativeEstimate second_subderivative_estimate(const std::function<double(const Vector&)>& f,
                                                           const Vector& x, const Vector& v, const Vector& w,
                                                           const std::vector<double>& t_grid,
                                                           double kernel_threshold = 1e-4) {
  if (t_grid.empty()) throw ValidationError("t_grid", "must be nonempty");
  SubderivativeEstimate e;
  e.t = t_grid;
  e.raw = second_order_quotients(f, x, v, w, t_grid);
  e.liminf = e.raw.back();
  if (e.liminf > kernel_threshold) {
    e.grid_used = true;
    const std::vector<double> t_last{t_grid.back()};
    for (Index i = 0; i < w.size(); ++i)
      for (double s : {-1e-3, 1e-3}) {
        Vector wp = w;
        wp(i) += s;
        e.liminf = std::min(e.liminf, second_order_quotients(f, x, v, wp, t_last)[0]);
      }
  }
  return e;
}

inline SubderivativeEstimate second_subderivative_estimate(const Regularizer& reg, const Vector& x, const Vector& v,
                                                           const Vector& w, const std::vector<double>& t_grid,
                                                           double kernel_threshold = 1e-4) {
  Tolerances exact;
  exact.member = 1e-13;
  return second_subderivative_estimate([&](const Vector& y) { return reg.value(y, exact); }, x, v, w, t_grid,
                                       kernel_threshold);
}

// ---------------------------------------------------------- kernel formula

/// Nearest point of the cone.
inline Vector project_onto_cone(const ConeDescription& c, const Vector& w) {
  return std::visit(
      [&](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, cone::Span>) {
          return k.s.project(w);
        } else if constexpr (std::is_same_v<T, cone::SubspacePlusRays>) {
          const Matrix q = k.span.complement_projector();
          if (k.rays.cols() == 0) return k.span.project(w);
          const Matrix qr = q * k.rays;
          return k.span.project(w) + qr * nnls(qr, q * w);
        } else if constexpr (std::is_same_v<T, cone::PolyhedralIneq>) {
          const Index n = w.size();
          const Matrix g = detail::vstack(detail::vstack(k.a.rows() > 0 ? k.a : Matrix(0, n), k.e.rows() > 0 ? k.e : Matrix(0, n)),
                                          k.e.rows() > 0 ? Matrix(-k.e) : Matrix(0, n));
          if (g.rows() == 0) return w;
          return project_polyhedron(g, Vector::Zero(g.rows()), w);
        } else if constexpr (std::is_same_v<T, cone::PsdEmbedded>) {
          return detail::psd_project(k, w);
        } else {
          throw Error(std::string("no projection onto a ") + ConeDescription{k}.kind_name() + " cone");
        }
      },
      c.node);
}

struct KernelFormulaReport {
  int n_dirs = 0;
  int both_member = 0;
  int both_nonmember = 0;
  int estimator_only = 0;
  int cone_only = 0;
  std::vector<Vector> disagreements;
  int disagreement_count() const { return estimator_only + cone_only; }
};

/// Compares "second subderivative vanishes" with membership in the tangent
/// cone of the conjugate subdifferential. Half of the directions are drawn
/// from the cone, half uniformly.
inline KernelFormulaReport kernel_formula_check(const Regularizer& reg, const Vector& x, const Vector& v, int n_dirs,
                                                std::uint64_t seed, const Tolerances& tol = {}) {
  if (!reg.qgc_flags().primal_qgc) throw ValidationError("reg", "quadratic growth required");
  const ConeDescription tangent = reg.tangent_conj_subdiff(v, x, tol);
  std::mt19937_64 rng(seed);
  const Index d = reg.dim();
  const std::vector<double> t_grid{1e-3, 1e-4, 1e-5};
  KernelFormulaReport rep;
  rep.n_dirs = n_dirs;
  for (int i = 0; i < n_dirs; ++i) {
    Vector w;
    if (i % 2 == 0) {
      w = Vector::Zero(d);
      for (int j = 0; j < 3; ++j) w += project_onto_cone(tangent, emp_detail::unit_gaussian(rng, d));
      if (w.norm() == 0.0) w = emp_detail::unit_gaussian(rng, d);
      else w /= w.norm();
    } else {
      w = emp_detail::unit_gaussian(rng, d);
    }
    const bool member = membership(tangent, w, tol.member);
    const bool flat = second_subderivative_estimate(reg, x, v, w, t_grid).liminf <= 1e-4;
    if (member && flat) ++rep.both_member;
    else if (!member && !flat) ++rep.both_nonmember;
    else {
      if (flat) ++rep.estimator_only;
      else ++rep.cone_only;
      rep.disagreements.push_back(w);
    }
  }
  return rep;
}

// ---------------------------------------------------------- zero product

struct ZeroProductReport {
  long samples = 0;
  /// Samples with <z, w> ~ 0, and those with both tangent memberships.
  long zero_branch = 0;
  long member_branch = 0;
  long positivity_violations = 0;
  long zero_violations = 0;
  double min_positivity_margin = std::numeric_limits<double>::infinity();
};

/// Graph samples (w, z) = ((prox(p) - x) / t, (p - prox(p) - v) / t) with
/// p = x + v + t d, checked against monotonicity and the zero-product
/// equivalence.
inline ZeroProductReport zero_product_check(const Regularizer& reg, const Vector& x, const Vector& v, long n_samples,
                                            std::uint64_t seed, const Tolerances& tol = {}, double t = 1e-6) {
  const QgcFlags q = reg.qgc_flags();
  if (!q.primal_qgc || !q.dual_qgc) throw ValidationError("reg", "primal-dual quadratic growth required");
  const ConeDescription t_sub = reg.tangent_subdiff(x, v, tol);
  const ConeDescription t_conj = reg.tangent_conj_subdiff(v, x, tol);
  std::mt19937_64 rng(seed);
  const Index d = reg.dim();
  const double eps = tol.member;
  ZeroProductReport rep;
  std::vector<Index> hint;
  for (long s = 0; s < n_samples; ++s) {
    const Vector p = x + v + t * emp_detail::unit_gaussian(rng, d);
    const Vector u = reg.prox(1.0, p, &hint);
    const Vector w = (u - x) / t, z = (p - u - v) / t;
    const double prod = z.dot(w);
    const double nzw = z.norm() * w.norm();
    ++rep.samples;
    const double margin = prod + 1e-8 * (1.0 + nzw);
    rep.min_positivity_margin = std::min(rep.min_positivity_margin, margin);
    if (margin < 0.0) ++rep.positivity_violations;
    const bool members = membership(t_sub, z, 10.0 * eps) && membership(t_conj, w, 10.0 * eps);
    if (prod <= eps * (nzw + 1.0)) {
      ++rep.zero_branch;
      if (!members) ++rep.zero_violations;
    }
    if (members) {
      ++rep.member_branch;
      if (std::abs(prod) > 10.0 * eps) ++rep.zero_violations;
    }
  }
  return rep;
}

}  // namespace isocalm
