#pragma once

#include <optional>

#include "isocalm/problem.hpp"

namespace isocalm {

struct SolverConfig {
  long max_iter = 200000;
  /// Target for both KKT residuals, relative to 1 + ||b||. Zero means the
  /// instance tolerance.
  double tol_kkt = 0.0;
  bool restart = true;
};

/// Raised when the iteration budget runs out; carries the best iterate.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, SolutionPair best) : Error(what), best_(std::move(best)) {}
  const SolutionPair& best() const { return best_; }

 private:
  SolutionPair best_;
};

struct KktReport {
  double stationarity = 0.0;
  double graph = 0.0;
};

namespace solver_detail {

struct Data {
  Matrix phi, k;
  Vector b;
  double mu;
  const Regularizer* reg;
  bool k_identity;
};

inline Data data_of(const ProblemInstance& inst) {
  return {inst.phi_matrix(), inst.k_matrix(), inst.b, inst.mu, &inst.reg, inst.k.is_identity()};
}

inline KktReport kkt(const Data& d, const Vector& x, const Vector& y, std::vector<Index>* hint = nullptr) {
  const Vector kx = d.k_identity ? x : Vector(d.k * x);
  KktReport r;
  r.stationarity = ((d.phi.transpose() * (d.phi * x - d.b)) / d.mu + d.k.transpose() * y).norm();
  r.graph = (kx - d.reg->prox(1.0, kx + y, hint)).norm();
  return r;
}

inline double gap_proxy(const Data& d, const Vector& x, const Vector& y) {
  const Vector kx = d.k * x;
  const auto& spec = d.reg->spec();
  if (const auto* g = std::get_if<reg::GroupLasso>(&spec)) {
    double excess = 0.0;
    for (const auto& grp : g->groups) {
      double s = 0.0;
      for (Index i : grp) s += y(i) * y(i);
      excess = std::max(excess, std::sqrt(s) - g->weight);
    }
    return std::abs(d.reg->value(kx) - y.dot(kx)) + excess;
  }
  if (const auto* nu = std::get_if<reg::Nuclear>(&spec)) {
    const SvdResult s = svd(unvec(y, nu->m, nu->n));
    const double excess = s.sigma.size() > 0 ? std::max(0.0, s.sigma(0) - nu->weight) : 0.0;
    return std::abs(d.reg->value(kx) - y.dot(kx)) + excess;
  }
  const auto& p = std::get<reg::PolyhedralIndicator>(spec);
  const double infeas = p.a.rows() > 0 ? std::max(0.0, (p.a * kx - p.c).maxCoeff()) : 0.0;
  return infeas + std::abs(y.dot(kx - d.reg->prox(1.0, kx + y)));
}

inline SolutionPair package(const Data& d, const Vector& x, const Vector& y, long iters) {
  SolutionPair p;
  p.x_bar = x;
  p.y_bar = y;
  p.v_bar = -(d.phi.transpose() * (d.phi * x - d.b)) / d.mu;
  const KktReport r = kkt(d, x, y);
  p.residuals = {r.stationarity, r.graph, gap_proxy(d, x, y)};
  p.iterations = iters;
  return p;
}

/// FISTA with gradient-based adaptive restart; the multiplier is v(x).
inline SolutionPair fista(const Data& d, Vector x, double target, const SolverConfig& cfg) {
  const double lip = std::pow(spectral_norm(d.phi), 2) / d.mu;
  const double step = lip > 0.0 ? 1.0 / lip : 1.0;
  std::vector<Index> hint;
  Vector z = x;
  double t = 1.0;
  auto multiplier = [&](const Vector& xx) { return Vector(-(d.phi.transpose() * (d.phi * xx - d.b)) / d.mu); };
  Vector best_x = x;
  double best_res = std::numeric_limits<double>::infinity();
  for (long it = 0; it <= cfg.max_iter; ++it) {
    const Vector y = multiplier(x);
    const double res = (x - d.reg->prox(1.0, x + y, &hint)).norm();
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }
    if (res <= target) return package(d, x, y, it);
    const Vector grad = -multiplier(z);
    const Vector xn = d.reg->prox(step, z - step * grad, &hint);
    if (cfg.restart && (z - xn).dot(xn - x) > 0.0) {
      t = 1.0;
      z = xn;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = xn + ((t - 1.0) / tn) * (xn - x);
      t = tn;
    }
    x = xn;
  }
  throw SolverError("FISTA did not reach the KKT tolerance", package(d, best_x, multiplier(best_x), cfg.max_iter));
}

/// ADMM on min f(x) + g(z) s.t. k x = z with exact x-updates (a proximal
/// term keeps the x-system definite when ker phi meets ker k) and residual
/// balancing of the penalty.
inline SolutionPair admm(const Data& d, Vector x, Vector y, double target, const SolverConfig& cfg) {
  const Index n = d.phi.cols();
  const Matrix ptp = d.phi.transpose() * d.phi / d.mu;
  const Matrix ktk = d.k.transpose() * d.k;
  const Vector ptb = d.phi.transpose() * d.b / d.mu;
  const double scale = std::max(1e-12, spectral_norm(ptp));
  const double kn2 = std::max(1e-12, std::pow(spectral_norm(d.k), 2));
  double rho = scale / kn2;
  double prox_reg = 0.0;
  Eigen::LDLT<Matrix> solver;
  auto factor = [&] {
    Matrix m = ptp + rho * ktk;
    const Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    prox_reg = es.eigenvalues().minCoeff() < 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())
                   ? 1e-3 * std::max(scale, rho * kn2)
                   : 0.0;
    m += prox_reg * Matrix::Identity(n, n);
    solver.compute(m);
  };
  factor();
  std::vector<Index> hint;
  Vector z = d.k * x;
  Vector best_x = x, best_y = y;
  double best_res = std::numeric_limits<double>::infinity();
  for (long it = 0; it <= cfg.max_iter; ++it) {
    const KktReport r = kkt(d, x, y, &hint);
    const double res = std::max(r.stationarity, r.graph);
    if (res < best_res) {
      best_res = res;
      best_x = x;
      best_y = y;
    }
    if (res <= target) return package(d, x, y, it);
    const Vector rhs = ptb - d.k.transpose() * y + rho * d.k.transpose() * z + prox_reg * x;
    x = solver.solve(rhs);
    const Vector kx = d.k * x;
    const Vector z_old = z;
    z = d.reg->prox(1.0 / rho, kx + y / rho, &hint);
    y += rho * (kx - z);
    if (it % 50 == 49) {
      const double primal = (kx - z).norm();
      const double dual = rho * (d.k.transpose() * (z - z_old)).norm();
      if (primal > 10.0 * dual || dual > 10.0 * primal) {
        rho *= primal > dual ? 2.0 : 0.5;
        factor();
      }
    }
  }
  throw SolverError("primal-dual splitting did not reach the KKT tolerance",
                    package(d, best_x, best_y, cfg.max_iter));
}

inline double target_of(const ProblemInstance& inst, const SolverConfig& cfg) {
  const double tol = cfg.tol_kkt > 0.0 ? cfg.tol_kkt : inst.tol.kkt;
  return tol * (1.0 + inst.b.norm());
}

}  // namespace solver_detail

inline KktReport kkt_residual(const ProblemInstance& inst, const Vector& x, const Vector& y) {
  if (x.size() != inst.dim_x()) throw ValidationError("x", "dimension mismatch");
  if (y.size() != inst.dim_y()) throw ValidationError("y", "dimension mismatch");
  return solver_detail::kkt(solver_detail::data_of(inst), x, y);
}

/// Fills v_bar and residuals for a given pair without solving.
inline SolutionPair make_pair(const ProblemInstance& inst, const Vector& x, const Vector& y) {
  kkt_residual(inst, x, y);
  return solver_detail::package(solver_detail::data_of(inst), x, y, 0);
}

inline SolutionPair solve_from(const ProblemInstance& inst, const Vector& x0, const Vector& y0,
                               const SolverConfig& cfg = {}) {
  inst.validate();
  const solver_detail::Data d = solver_detail::data_of(inst);
  const double target = solver_detail::target_of(inst, cfg);
  if (d.k_identity) return solver_detail::fista(d, x0, target, cfg);
  return solver_detail::admm(d, x0, y0, target, cfg);
}

inline SolutionPair solve(const ProblemInstance& inst, const SolverConfig& cfg = {}) {
  return solve_from(inst, Vector::Zero(inst.dim_x()), Vector::Zero(inst.dim_y()), cfg);
}

/// Solves P(b + db, mu + dmu) warm-started at `warm`.
inline SolutionPair solve_perturbed(const ProblemInstance& inst, const Vector& db, double dmu, const SolutionPair& warm,
                                    const SolverConfig& cfg = {}) {
  if (db.size() != inst.b.size()) throw ValidationError("db", "dimension mismatch");
  if (!(inst.mu + dmu > 0.0)) throw ValidationError("dmu", "perturbed mu must stay positive");
  ProblemInstance p = inst;
  p.b += db;
  p.mu += dmu;
  return solve_from(p, warm.x_bar, warm.y_bar, cfg);
}

}  // namespace isocalm
