#include <random>

#include <gtest/gtest.h>

#include "isocalm/cone.hpp"

using namespace isocalm;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Subspace line(const Vector& d) { return {d.size(), d.normalized()}; }

Matrix gaussian(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
  return a;
}

}  // namespace

TEST(Membership, RayIsOneSided) {
  const auto ray = ConeDescription::rays(Subspace::zero(2), v2(0.6, 0.8));
  EXPECT_TRUE(membership(ray, v2(0.6, 0.8), 1e-9));
  EXPECT_FALSE(membership(ray, v2(-0.6, -0.8), 1e-9));
}

TEST(Membership, PsdTangentAtDiag10) {
  // p = 2 block on the 2x2 identity embedding, kernel of S = diag(1,0) is e2.
  const ConeDescription c{cone::PsdEmbedded{Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            Matrix::Identity(2, 2).col(1), 2, 2}};
  Matrix h1(2, 2), h2(2, 2);
  h1 << 0, 0, 0, -1;
  h2 << -5, 0, 0, 1;
  EXPECT_FALSE(membership(c, vec(h1), 1e-9));
  EXPECT_TRUE(membership(c, vec(h2), 1e-9));
}

TEST(Membership, PreimageOfFullLine) {
  const Tolerances tol;
  const ConeDescription inner = ConeDescription::full(1);
  const ConeDescription c{cone::Preimage{materialize(LinearOp::grad1d(2)), std::make_shared<const ConeDescription>(inner)}};
  EXPECT_TRUE(membership(c, v2(2, 1), 1e-9));
  EXPECT_TRUE(membership(preimage(LinearOp::grad1d(2), inner, tol), v2(2, 1), 1e-9));
}

TEST(Trivial, FullConeMeetsLine) {
  const Tolerances tol;
  const auto v = trivial_intersection(line(v2(1, -1)), ConeDescription::full(2), tol);
  ASSERT_TRUE(v.is_nontrivial());
  EXPECT_NEAR(std::abs(v.witness(0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(v.witness(0), -v.witness(1), 1e-12);
  EXPECT_TRUE(v.exact);
}

TEST(Trivial, OrthogonalLines) {
  const Tolerances tol;
  EXPECT_TRUE(trivial_intersection(line(v2(1, -1)), ConeDescription::span(line(v2(1, 1))), tol).is_trivial());
}

TEST(Trivial, OrthantAgainstAntidiagonal) {
  const Tolerances tol;
  const auto orthant = ConeDescription::rays(Subspace::zero(2), Matrix::Identity(2, 2));
  EXPECT_TRUE(trivial_intersection(line(v2(1, -1)), orthant, tol).is_trivial());
  const auto v = trivial_intersection(line(v2(1, 1)), orthant, tol);
  ASSERT_TRUE(v.is_nontrivial());
  EXPECT_GT(v.witness(0), 0.0);
}

TEST(Trivial, ZeroSubspaceIsTrivial) {
  EXPECT_TRUE(trivial_intersection(Subspace::zero(3), ConeDescription::full(3), Tolerances{}).is_trivial());
}

TEST(Trivial, CombinatorialLimit) {
  const Tolerances tol;
  const auto rays = ConeDescription::rays(Subspace::zero(3), Matrix::Random(3, 25).cwiseAbs() + Matrix::Ones(3, 25));
  const auto v = trivial_intersection(Subspace::full(3), rays, tol);
  EXPECT_TRUE(v.is_unknown());
  EXPECT_EQ(v.reason, "combinatorial limit");
}

TEST(Trivial, PsdNondegenerateIsExact) {
  const Tolerances tol;
  // Kernel block empty: the cone is the embedded symmetric span.
  Matrix u(2, 1);
  u << 1, 0;
  const ConeDescription c{cone::PsdEmbedded{u, u, Matrix(1, 0), 2, 2}};
  Matrix kb(4, 3);  // span of E12, E21, E22
  kb << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const auto v = trivial_intersection(Subspace(4, kb), c, tol);
  EXPECT_TRUE(v.is_trivial());
  EXPECT_TRUE(v.exact);
}

TEST(Trivial, PsdDegenerateAgainstAntisymmetricIsUnknown) {
  const Tolerances tol;
  const ConeDescription c{cone::PsdEmbedded{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2, 2}};
  Vector anti(4);
  anti << 0, 1, -1, 0;
  const auto v = trivial_intersection(line(anti), c, tol, 7);
  EXPECT_TRUE(v.is_unknown());
  EXPECT_EQ(v.reason, "PSD cone, heuristic inconclusive");
}

TEST(Trivial, PsdDegenerateHeuristicFindsWitness) {
  const Tolerances tol;
  const ConeDescription c{cone::PsdEmbedded{Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2), 2, 2}};
  Vector ident(4);
  ident << 1, 0, 0, 1;
  const auto v = trivial_intersection(line(ident), c, tol, 1);
  ASSERT_TRUE(v.is_nontrivial());
  EXPECT_FALSE(v.exact);
  EXPECT_NEAR(v.witness(0), 1.0 / std::sqrt(2.0), 1e-9);
}

TEST(Trivial, PsdKernelOneIsExact) {
  const Tolerances tol;
  // {H sym : H22 >= 0} against span{-E22}: trivial; against span{E22}: witness.
  const ConeDescription c{cone::PsdEmbedded{Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            Matrix::Identity(2, 2).col(1), 2, 2}};
  Vector e22 = Vector::Zero(4);
  e22(3) = 1;
  EXPECT_TRUE(trivial_intersection(line(e22), c, tol).is_nontrivial());
  Vector anti(4);
  anti << 0, 1, -1, 0;
  EXPECT_TRUE(trivial_intersection(line(anti), c, tol).is_trivial());
}

TEST(Preimage, Examples) {
  const Tolerances tol;
  const ConeDescription ker = preimage(LinearOp::grad1d(3), ConeDescription::zero(2), tol);
  const auto* s = std::get_if<cone::Span>(&ker.node);
  ASSERT_NE(s, nullptr);
  ASSERT_EQ(s->s.dim(), 1);
  EXPECT_TRUE(s->s.contains(Vector::Ones(3) / std::sqrt(3.0), 1e-12));

  const auto ray = ConeDescription::rays(Subspace::zero(2), v2(0.6, 0.8));
  const ConeDescription same = preimage(LinearOp::identity(2), ray, tol);
  EXPECT_EQ(same.kind_name(), "subspace_plus_rays");

  Matrix k(2, 2);
  k << 1, 0, 0, 0;
  const ConeDescription all = preimage(k, ConeDescription::span(line(v2(1, 0))), tol);
  ASSERT_NE(std::get_if<cone::Span>(&all.node), nullptr);
  EXPECT_EQ(std::get<cone::Span>(all.node).s.dim(), 2);
}

TEST(Polar, OrthantIsNegativeOrthant) {
  const Tolerances tol;
  const auto orthant = ConeDescription::rays(Subspace::zero(2), Matrix::Identity(2, 2));
  const auto pol = polar(orthant, tol);
  ASSERT_TRUE(pol.has_value());
  EXPECT_TRUE(membership(*pol, v2(-1, -2), 1e-9));
  EXPECT_FALSE(membership(*pol, v2(1, -2), 1e-9));
  const auto back = polar(*pol, tol);
  ASSERT_TRUE(back.has_value());
  EXPECT_TRUE(membership(*back, v2(1, 2), 1e-9));
  EXPECT_FALSE(membership(*back, v2(-1, 2), 1e-9));
}

TEST(FaceTangent, RangeRestrictionExamples) {
  const Tolerances tol;
  // Ray R+ u with u outside the range, anchored at 0: only the origin survives.
  FaceDescription ray;
  ray.ambient = 2;
  Matrix a(1, 2), e(1, 2);
  a << -1, 0;
  e << 0, 1;
  ray.set = PolyhedralFace{a, Vector::Zero(1), e, Vector::Zero(1)};
  Matrix k(2, 1);
  k << 0, 1;
  const auto t = tangent_with_range_restriction(ray, Vector::Zero(2), k, tol);
  EXPECT_TRUE(trivial_intersection(Subspace::full(2), t, tol).is_trivial());

  // Range equal to the whole space: same as the plain tangent.
  const auto t_full = tangent_with_range_restriction(ray, Vector::Zero(2), Matrix::Identity(2, 2), tol);
  EXPECT_TRUE(membership(t_full, v2(1, 0), 1e-9));
  EXPECT_FALSE(membership(t_full, v2(-1, 0), 1e-9));

  // span{e1, e2} in R^3 cut by range span{e1}, interior anchor: span{e1}.
  FaceDescription plane;
  plane.ambient = 3;
  Matrix e3(1, 3);
  e3 << 0, 0, 1;
  plane.set = PolyhedralFace{Matrix(0, 3), Vector(0), e3, Vector::Zero(1)};
  Matrix k1(3, 1);
  k1 << 1, 0, 0;
  const auto tp = tangent_with_range_restriction(plane, Vector::Zero(3), k1, tol);
  const auto* s = std::get_if<cone::Span>(&tp.node);
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->s.dim(), 1);
  EXPECT_TRUE(s->s.contains(Vector::Unit(3, 0), 1e-12));
}

TEST(Trivial, WitnessSoundnessAndBruteForce) {
  const Tolerances tol;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  int nontrivial = 0, trivial = 0;
  for (int t = 0; t < 200; ++t) {
    const Index n = 2 + t % 4;
    const Index nd = 1 + t % std::max<Index>(1, n - 1);
    const Index rays = 1 + t % 4;
    const Index sd = t % 2;
    Matrix nb = gaussian(n, nd, rng);
    Matrix r = gaussian(n, rays, rng);
    if (t % 3 == 0) r.col(0) = nb.col(0);  // plant a shared direction
    const Subspace sub = span_of(n, nb, tol);
    const auto c = ConeDescription::rays(span_of(n, gaussian(n, sd, rng), tol), r);
    const auto v = trivial_intersection(sub, c, tol, static_cast<std::uint64_t>(t));
    ASSERT_FALSE(v.is_unknown()) << v.reason;
    if (v.is_nontrivial()) {
      ++nontrivial;
      EXPECT_NEAR(v.witness.norm(), 1.0, 1e-12);
      EXPECT_LE(sub.residual(v.witness), 10 * tol.member);
      EXPECT_TRUE(membership(c, v.witness, 10 * tol.member));
    } else {
      ++trivial;
      // Sampling oracle: no sampled point of the unit sphere of N is a member.
      for (int s = 0; s < 2000; ++s) {
        Vector z(sub.dim());
        for (Index i = 0; i < z.size(); ++i) z(i) = g(rng);
        const Vector w = sub.basis * z.normalized();
        EXPECT_FALSE(membership(c, w, 10 * tol.member));
      }
    }
  }
  EXPECT_GT(nontrivial, 20);
  EXPECT_GT(trivial, 20);
}

TEST(Trivial, MonotoneInRays) {
  const Tolerances tol;
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    const Index n = 3 + t % 2;
    const Subspace sub = span_of(n, gaussian(n, 1 + t % 2, rng), tol);
    const Matrix r = gaussian(n, 4, rng);
    const auto big = ConeDescription::rays(Subspace::zero(n), r);
    const auto small = ConeDescription::rays(Subspace::zero(n), r.leftCols(2));
    if (trivial_intersection(sub, big, tol).is_trivial()) {
      EXPECT_TRUE(trivial_intersection(sub, small, tol).is_trivial());
    }
  }
}

TEST(RiMeetsRange, PolyhedralExamples) {
  const Tolerances tol;
  // Ray face R+ e1 in R^2; range span{e2} touches only the vertex.
  FaceDescription ray;
  ray.ambient = 2;
  Matrix a(1, 2), e(1, 2);
  a << -1, 0;
  e << 0, 1;
  ray.set = PolyhedralFace{a, Vector::Zero(1), e, Vector::Zero(1)};
  Matrix k(2, 1);
  k << 0, 1;
  EXPECT_EQ(polyhedral_ri_meets_range(ray, Vector::Zero(2), k, tol), Tri::no);
  EXPECT_EQ(polyhedral_ri_meets_range(ray, Vector::Zero(2), Matrix::Identity(2, 2), tol), Tri::yes);
  Matrix k2(2, 1);
  k2 << 1, 1;
  EXPECT_EQ(polyhedral_ri_meets_range(ray, Vector::Zero(2), k2, tol), Tri::no);
  Matrix k3(2, 1);
  k3 << 1, 0;
  EXPECT_EQ(polyhedral_ri_meets_range(ray, Vector::Zero(2), k3, tol), Tri::yes);
}
