#include <random>

#include <gtest/gtest.h>

#include "isocalm/demo_cases.hpp"

using namespace isocalm;
using demo::mat;
using demo::vecd;

namespace {

double objective(const ProblemInstance& p, const Vector& x) {
  const Matrix phi = p.phi_matrix();
  return (phi * x - p.b).squaredNorm() / (2.0 * p.mu) + p.reg.value(p.k_matrix() * x);
}

double target(const ProblemInstance& p) { return p.tol.kkt * (1.0 + p.b.norm()); }

Matrix gaussian(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

}  // namespace

TEST(Solve, ScalarLassoClosedForm) {
  const ProblemInstance p = demo::scalar_lasso();
  const SolutionPair s = solve(p);
  EXPECT_NEAR(s.x_bar(0), 2.0, 1e-10);
  EXPECT_NEAR(s.y_bar(0), 1.0, 1e-10);
  EXPECT_NEAR(s.v_bar(0), 1.0, 1e-10);
  EXPECT_LE(s.residuals.stationarity, target(p));
  EXPECT_LE(s.residuals.dual_feas, target(p));
}

TEST(Solve, ZeroData) {
  const ProblemInstance p = demo::make(Matrix::Identity(2, 2), Vector::Zero(2), 1.0, LinearOp::identity(2), demo::l1(2));
  const SolutionPair s = solve(p);
  EXPECT_EQ(s.x_bar.norm(), 0.0);
  const KktReport r = kkt_residual(p, Vector::Zero(2), Vector::Zero(2));
  EXPECT_EQ(r.stationarity, 0.0);
  EXPECT_EQ(r.graph, 0.0);
}

TEST(Solve, SegmentReturnsPointOnSegment) {
  const ProblemInstance p = demo::lasso_segment();
  const SolutionPair s = solve(p);
  EXPECT_GE(s.x_bar.minCoeff(), -1e-10);
  EXPECT_NEAR(s.x_bar.sum(), 1.0, 1e-9);
  EXPECT_NEAR(s.y_bar(0), 1.0, 1e-9);
  EXPECT_NEAR(s.y_bar(1), 1.0, 1e-9);
  const KktReport r = kkt_residual(p, s.x_bar, s.y_bar);
  EXPECT_LE(r.stationarity, target(p));
  EXPECT_LE(r.graph, target(p));
}

TEST(KktResidual, ExactPairAndCorruptedMultiplier) {
  const ProblemInstance p = demo::scalar_lasso();
  const KktReport exact = kkt_residual(p, vecd({2}), vecd({1}));
  EXPECT_LE(exact.stationarity, 1e-10);
  EXPECT_LE(exact.graph, 1e-10);
  const ProblemInstance seg = demo::lasso_segment();
  const KktReport bad = kkt_residual(seg, vecd({0.5, 0.5}), vecd({1.5, 1}));
  EXPECT_GE(bad.graph, 0.1);
  EXPECT_THROW(kkt_residual(p, vecd({1, 2}), vecd({1})), ValidationError);
}

TEST(SolvePerturbed, Examples) {
  const ProblemInstance p = demo::scalar_lasso();
  const SolutionPair s = solve(p);
  const SolutionPair same = solve_perturbed(p, Vector::Zero(1), 0.0, s);
  EXPECT_EQ(same.iterations, 0);
  EXPECT_EQ(same.x_bar, s.x_bar);
  EXPECT_NEAR(solve_perturbed(p, vecd({0.1}), 0.0, s).x_bar(0), 2.1, 1e-10);
  EXPECT_NEAR(solve_perturbed(p, Vector::Zero(1), 1.0, s).x_bar(0), 1.0, 1e-10);
  EXPECT_THROW(solve_perturbed(p, Vector::Zero(1), -1.0, s), ValidationError);
  EXPECT_THROW(solve_perturbed(p, Vector::Zero(2), 0.0, s), ValidationError);
}

TEST(Solve, IdentityOperatorVersusDenseIdentity) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Matrix phi = gaussian(3, 4, rng);
    const Vector b = gaussian(3, 1, rng);
    const ProblemInstance a = demo::make(phi, b, 0.7, LinearOp::identity(4), demo::l1(4, 0.3));
    const ProblemInstance d = demo::make(phi, b, 0.7, LinearOp::dense(Matrix::Identity(4, 4)), demo::l1(4, 0.3));
    const SolutionPair sa = solve(a), sd = solve(d);
    EXPECT_LE((sa.x_bar - sd.x_bar).norm(), 1e-8) << t;
    EXPECT_LE(sd.residuals.stationarity, target(d));
    EXPECT_LE(sd.residuals.dual_feas, target(d));
  }
}

TEST(Solve, AnalysisOperatorsReachTolerance) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 8; ++t) {
    const Index n = 3 + t % 3;
    const Matrix phi = gaussian(n, n, rng);
    const Vector b = gaussian(n, 1, rng);
    const ProblemInstance p = demo::make(phi, b, 1.0, LinearOp::grad1d(n), demo::l1(n - 1, 0.5));
    const SolutionPair s = solve(p);
    EXPECT_LE(s.residuals.stationarity, target(p));
    EXPECT_LE(s.residuals.dual_feas, target(p));
    // Dual feasibility of the multiplier for the l1 norm.
    EXPECT_LE(s.y_bar.cwiseAbs().maxCoeff(), 0.5 + 1e-9);
  }
}

TEST(Solve, OptimalAgainstRandomFeasiblePoints) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; ++t) {
    const Matrix phi = gaussian(2, 3, rng);
    const Vector b = gaussian(2, 1, rng);
    const ProblemInstance p = demo::make(phi, b, 1.0, LinearOp::identity(3),
                                         Regularizer(reg::GroupLasso{3, {{0, 1}, {2}}, 0.4}));
    const SolutionPair s = solve(p);
    const double best = objective(p, s.x_bar);
    for (int k = 0; k < 200; ++k) {
      Vector x = s.x_bar;
      for (Index i = 0; i < 3; ++i) x(i) += 0.1 * g(rng);
      EXPECT_GE(objective(p, x), best - 1e-12);
    }
  }
}

TEST(Solve, NuclearAndPolyhedral) {
  const SolutionPair nd = solve(demo::nuclear_nondegenerate());
  EXPECT_LE((nd.x_bar - vecd({1, 0, 0, 0})).norm(), 1e-9);
  EXPECT_LE((nd.y_bar - vecd({1, 0, 0, 0.5})).norm(), 1e-9);
  const SolutionPair box = solve(demo::box_corner());
  EXPECT_LE((box.x_bar - vecd({1, 1})).norm(), 1e-9);
}

TEST(Solve, StrictlyConvexRestartsAgree) {
  // Ker phi = {0}: every start reaches the same point.
  std::mt19937_64 rng(8);
  const Matrix phi = gaussian(4, 3, rng);
  const Vector b = gaussian(4, 1, rng);
  const ProblemInstance p = demo::make(phi, b, 1.0, LinearOp::identity(3), demo::l1(3, 0.5));
  const SolutionPair ref = solve(p);
  for (int k = 0; k < 10; ++k) {
    const SolutionPair s = solve_from(p, gaussian(3, 1, rng), Vector::Zero(3));
    EXPECT_LE((s.x_bar - ref.x_bar).norm(), 1e-6);
  }
}

TEST(Solve, BudgetExhaustionCarriesBestIterate) {
  SolverConfig cfg;
  cfg.max_iter = 2;
  cfg.tol_kkt = 1e-16;
  std::mt19937_64 rng(2);
  const ProblemInstance p = demo::make(gaussian(3, 3, rng), gaussian(3, 1, rng), 1.0, LinearOp::grad1d(3), demo::l1(2));
  try {
    solve(p, cfg);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.best().x_bar.size(), 3);
    EXPECT_GT(e.best().residuals.stationarity + e.best().residuals.dual_feas, 0.0);
  }
}
