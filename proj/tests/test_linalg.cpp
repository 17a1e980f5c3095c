#include <random>

#include <gtest/gtest.h>

#include "isocalm/linalg.hpp"

using namespace isocalm;

namespace {

Matrix random_matrix(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return a;
}

}  // namespace

TEST(Svd, Identity) {
  const SvdResult s = svd(Matrix::Identity(2, 2));
  EXPECT_NEAR(s.sigma(0), 1.0, 1e-14);
  EXPECT_NEAR(s.sigma(1), 1.0, 1e-14);
  EXPECT_LE((s.u * s.sigma.asDiagonal() * s.v.transpose() - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Svd, ZeroMatrix) {
  const SvdResult s = svd(Matrix::Zero(2, 2));
  EXPECT_EQ(s.sigma(0), 0.0);
  EXPECT_EQ(s.sigma(1), 0.0);
}

TEST(Svd, TallRankOne) {
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = 3.0;
  const SvdResult s = svd(a);
  EXPECT_NEAR(s.sigma(0), 3.0, 1e-14);
  EXPECT_NEAR(s.sigma(1), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(s.u(0, 0)), 1.0, 1e-14);
}

TEST(Svd, RejectsNonFinite) {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(a), ValidationError);
}

TEST(Svd, ReconstructsRandom) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random_matrix(2 + t % 4, 1 + t % 5, rng);
    const SvdResult s = svd(a);
    Matrix d = Matrix::Zero(a.rows(), a.cols());
    for (Index i = 0; i < s.sigma.size(); ++i) d(i, i) = s.sigma(i);
    EXPECT_LE((a - s.u * d * s.v.transpose()).norm(), 1e-8 * std::max(1.0, s.sigma(0)));
    for (Index i = 1; i < s.sigma.size(); ++i) EXPECT_GE(s.sigma(i - 1), s.sigma(i));
  }
}

TEST(NullSpace, Examples) {
  const Tolerances tol;
  Matrix a(1, 2);
  a << 1, 1;
  const Subspace k = null_space(a, tol);
  ASSERT_EQ(k.dim(), 1);
  EXPECT_NEAR(std::abs(k.basis(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(k.basis(0, 0), -k.basis(1, 0), 1e-14);
  EXPECT_EQ(null_space(Matrix::Identity(2, 2), tol).dim(), 0);
  EXPECT_EQ(null_space(Matrix::Zero(2, 2), tol).dim(), 2);
}

TEST(RangeSpace, Examples) {
  const Tolerances tol;
  Matrix a(2, 1);
  a << 1, 1;
  const Subspace r = range_space(a, tol);
  ASSERT_EQ(r.dim(), 1);
  EXPECT_NEAR(std::abs(r.basis(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(range_space(Matrix::Identity(2, 2), tol).dim(), 2);
  EXPECT_EQ(range_space(Matrix::Zero(2, 2), tol).dim(), 0);
}

TEST(NullSpace, RankNullityAndOrthogonality) {
  const Tolerances tol;
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const Index m = 1 + t % 4, n = 1 + (t / 4) % 6, r = std::min<Index>(1 + t % 3, std::min(m, n));
    const Matrix a = random_matrix(m, r, rng) * random_matrix(r, n, rng);
    const Subspace ker = null_space(a, tol);
    const Subspace row = range_space(a.transpose(), tol);
    EXPECT_EQ(ker.dim() + range_space(a, tol).dim(), n);
    if (ker.dim() > 0 && row.dim() > 0) {
      EXPECT_LE((ker.basis.transpose() * row.basis).cwiseAbs().maxCoeff(), tol.orth);
    }
    if (ker.dim() > 0) {
      EXPECT_LE((a * ker.basis).colwise().norm().maxCoeff(), 1e-9 * std::max(1.0, a.norm()));
    }
  }
}

TEST(SymEig, Examples) {
  const Tolerances tol;
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = -1;
  EigResult e = sym_eig(d, tol);
  EXPECT_NEAR(e.lambda(0), 2.0, 1e-14);
  EXPECT_NEAR(e.lambda(1), -1.0, 1e-14);
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  e = sym_eig(s, tol);
  EXPECT_NEAR(e.lambda(0), 1.0, 1e-14);
  EXPECT_NEAR(e.lambda(1), -1.0, 1e-14);
  EXPECT_LE((e.q * e.lambda.asDiagonal() * e.q.transpose() - s).norm(), 1e-12);
  e = sym_eig(Matrix::Zero(2, 2), tol);
  EXPECT_EQ(e.lambda(0), 0.0);
}

TEST(SymEig, RejectsAsymmetric) {
  Matrix s(2, 2);
  s << 0, 1, 0, 0;
  EXPECT_THROW(sym_eig(s, Tolerances{}), ValidationError);
}

TEST(Intersect, Examples) {
  const Tolerances tol;
  const Subspace e1(2, Matrix::Identity(2, 2).col(0));
  const Subspace e2(2, Matrix::Identity(2, 2).col(1));
  EXPECT_EQ(intersect_subspaces(e1, e2, tol).dim(), 0);
  EXPECT_EQ(intersect_subspaces(e1, Subspace::full(2), tol).dim(), 1);

  Matrix p(3, 1), q(3, 2);
  p << 1, 1, 0;
  q << 1, 0, 1, 0, 0, 1;
  const Subspace sp = span_of(3, p, tol), sq = span_of(3, q, tol);
  const Subspace meet = intersect_subspaces(sp, sq, tol);
  ASSERT_EQ(meet.dim(), 1);
  EXPECT_NEAR(std::abs(meet.basis(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(meet.basis(2, 0), 0.0, 1e-12);
}

TEST(Intersect, Symmetric) {
  const Tolerances tol;
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Index n = 5;
    const Matrix shared = random_matrix(n, t % 3, rng);
    Matrix pa(n, shared.cols() + 1), qa(n, shared.cols() + 2);
    pa << shared, random_matrix(n, 1, rng);
    qa << shared, random_matrix(n, 2, rng);
    const Subspace p = span_of(n, pa, tol), q = span_of(n, qa, tol);
    const Subspace pq = intersect_subspaces(p, q, tol), qp = intersect_subspaces(q, p, tol);
    EXPECT_EQ(pq.dim(), qp.dim());
    EXPECT_EQ(pq.dim(), shared.cols());
    for (Index j = 0; j < pq.dim(); ++j) {
      EXPECT_TRUE(p.contains(pq.basis.col(j), tol.member));
      EXPECT_TRUE(q.contains(pq.basis.col(j), tol.member));
      EXPECT_TRUE(qp.contains(pq.basis.col(j), tol.member));
    }
  }
}

TEST(Nnls, MatchesProjectionOntoOrthant) {
  Vector b(3);
  b << 1, -2, 3;
  const Vector x = nnls(Matrix::Identity(3, 3), b);
  EXPECT_NEAR(x(0), 1.0, 1e-14);
  EXPECT_NEAR(x(1), 0.0, 1e-14);
  EXPECT_NEAR(x(2), 3.0, 1e-14);
}

TEST(Tolerances, Validation) {
  Tolerances t;
  EXPECT_NO_THROW(t.validate());
  t.rank = 1.5;
  EXPECT_THROW(t.validate(), ValidationError);
}
