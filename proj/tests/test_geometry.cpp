#include "mcflow/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mcflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

Body cube() {
  std::vector<HalfSpace> hs;
  for (int i = 0; i < 3; ++i) {
    hs.push_back({Vec::Unit(3, i), 1.0});
    hs.push_back({-Vec::Unit(3, i), 1.0});
  }
  return make_polytope(hs, 3);
}

Body square() {
  return make_polytope({{v2(1, 0), 1.0}, {v2(-1, 0), 1.0}, {v2(0, 1), 1.0}, {v2(0, -1), 1.0}}, 2);
}

}  // namespace

TEST(MakeBody, BallHasFullHull) {
  const Body b = make_ball(Vec::Zero(2), 1.0);
  EXPECT_EQ(b.hull.dim(), 2);
  EXPECT_TRUE(b.is_convex());
}

TEST(MakeBody, SimplexInR4HasThreeDimensionalHull) {
  std::vector<Vec> v;
  for (int i = 0; i < 4; ++i) v.push_back(Vec::Unit(4, i));
  const Body s = make_polytope_from_vertices(v);
  EXPECT_EQ(s.hull.dim(), 3);
  EXPECT_EQ(s.polytope().vertices.size(), 4u);
  for (const auto& p : v) EXPECT_LE(s.hull.distance(p), 1e-12);
}

TEST(MakeBody, NormalsAreUnitNormalized) {
  const Body b = make_polytope({{v2(2, 0), 2.0}, {v2(-3, 0), 3.0}, {v2(0, 5), 5.0}, {v2(0, -1), 1.0}}, 2);
  for (const auto& h : b.polytope().halfspaces) EXPECT_NEAR(h.normal.norm(), 1.0, 1e-14);
  EXPECT_TRUE(contains(b, v2(1, 1)));
  EXPECT_FALSE(contains(b, v2(1.01, 0)));
}

TEST(MakeBody, RejectsInfeasibleAndUnbounded) {
  EXPECT_THROW(make_polytope({{v2(1, 0), -1.0}, {v2(-1, 0), -1.0}, {v2(0, 1), 1.0}, {v2(0, -1), 1.0}}, 2), GeometryError);
  EXPECT_THROW(make_polytope({{v2(1, 0), 1.0}, {v2(0, 1), 1.0}}, 2), GeometryError);
  EXPECT_THROW(make_ball(Vec::Zero(2), -1.0), GeometryError);
}

TEST(Contains, MatchesDefinition) {
  const Body ball = make_ball(Vec::Zero(2), 1.0);
  EXPECT_TRUE(contains(ball, Vec::Zero(2)));
  EXPECT_FALSE(contains(ball, v2(1.0 + 1e-3, 0.0), 1e-6));
  EXPECT_TRUE(contains(square(), v2(1, 1), 1e-9));
}

TEST(Contains, DiscUnionTouchesAtOrigin) {
  const Body u = make_union({make_ball(v2(1, 0), 1.0), make_ball(v2(-1, 0), 1.0)});
  EXPECT_TRUE(contains(u, Vec::Zero(2)));
  EXPECT_TRUE(contains(u, v2(-1.5, 0.5)));
  EXPECT_FALSE(contains(u, v2(0, 0.1)));
  EXPECT_FALSE(u.is_convex());
}

TEST(FaceOf, CubeInteriorFacetVertex) {
  const Body c = cube();
  EXPECT_EQ(face_of(c, v3(0, 0, 0)).dim, 3);
  const Face facet = face_of(c, v3(1, 0.5, -0.2));
  EXPECT_EQ(facet.dim, 2);
  EXPECT_EQ(facet.vertex_ids.size(), 4u);
  for (int v : facet.vertex_ids) EXPECT_EQ(c.polytope().vertices[static_cast<std::size_t>(v)][0], 1.0);
  EXPECT_EQ(face_of(c, v3(1, 1, 1)).dim, 0);
  EXPECT_THROW(face_of(c, v3(2, 0, 0)), GeometryError);
}

TEST(Skeleton, CountsFaces) {
  auto count = [](const Skeleton& sk, int dim) {
    return std::count_if(sk.faces.begin(), sk.faces.end(), [&](const Face& f) { return f.dim == dim; });
  };
  const Skeleton c1 = skeleton(cube(), 1);
  EXPECT_EQ(count(c1, 0), 8);
  EXPECT_EQ(count(c1, 1), 12);
  EXPECT_EQ(c1.faces.size(), 20u);

  std::vector<Vec> v;
  for (int i = 0; i < 4; ++i) v.push_back(Vec::Unit(4, i));
  const Skeleton s1 = skeleton(make_polytope_from_vertices(v), 1);
  EXPECT_EQ(count(s1, 0), 4);
  EXPECT_EQ(count(s1, 1), 6);

  const Skeleton q0 = skeleton(square(), 0);
  EXPECT_EQ(q0.faces.size(), 4u);
  EXPECT_EQ(count(skeleton(cube(), 2), 2), 6);
}

TEST(Skeleton, FaceOfAgreesWithSkeletonOnBoundarySamples) {
  const Body c = cube();
  const Skeleton sk = skeleton(c, 1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = u(rng);
    // Push two coordinates to the boundary: the point lies on an edge.
    x[trial % 3] = 1.0;
    x[(trial + 1) % 3] = -1.0;
    const Face f = face_of(c, x);
    EXPECT_LE(f.dim, 1);
    const bool listed = std::any_of(sk.faces.begin(), sk.faces.end(), [&](const Face& g) { return g == f; });
    EXPECT_TRUE(listed);
  }
}

TEST(EnclosingBall, ContainsTheBody) {
  const auto b = enclosing_ball(make_ball(Vec::Zero(2), 1.0));
  EXPECT_NEAR(b.radius, 1.0, 1e-15);
  const auto s = enclosing_ball(square());
  EXPECT_LE(s.radius, std::sqrt(2.0) + 1e-12);
  EXPECT_LE(s.center.norm(), 1e-12);
  const auto seg = enclosing_ball(make_segment(v2(-1, 0), v2(1, 0)));
  EXPECT_LE(seg.radius, 1.0 + 1e-12);
}

TEST(BoundaryClip, BallCubeCases) {
  const Body ball = make_ball(Vec::Zero(2), 1.0);
  const ClipResult r = boundary_clip(ball, Vec::Zero(2), v2(2, 0));
  EXPECT_FALSE(r.reached);
  EXPECT_LE((r.point - v2(1, 0)).norm(), 1e-12);

  const Body c = cube();
  const ClipResult in = boundary_clip(c, Vec::Zero(3), v3(0.5, 0, 0));
  EXPECT_TRUE(in.reached);
  EXPECT_LE((in.point - v3(0.5, 0, 0)).norm(), 1e-15);

  const ClipResult out = boundary_clip(c, v3(0.9, 0, 0), v3(1.2, 0, 0));
  EXPECT_FALSE(out.reached);
  EXPECT_LE((out.point - v3(1, 0, 0)).norm(), 1e-12);
  ASSERT_TRUE(out.face.has_value());
  EXPECT_EQ(out.face->dim, 2);
  EXPECT_TRUE(contains(c, out.point, 1e-9));
}

TEST(Product, SquareTimesSegmentIsAPrism) {
  const Body p = make_product(square(), make_polytope({{Vec::Constant(1, 1.0), 1.0}, {Vec::Constant(1, -1.0), 1.0}}, 1));
  EXPECT_TRUE(p.is_polytope());
  EXPECT_EQ(p.ambient_dim, 3);
  EXPECT_EQ(p.polytope().vertices.size(), 8u);
  EXPECT_EQ(face_of(p, v3(1, 0, 0)).dim, 2);
}

TEST(Semialgebraic, CuspRegion) {
  const Polynomial upper{{{1.0, {0, 1}}, {-1.0, {2, 0}}, {-0.01, {0, 0}}}};
  const Polynomial lower{{{-1.0, {0, 1}}, {-1.0, {2, 0}}, {-0.01, {0, 0}}}};
  const Body b = make_semialgebraic({upper, lower}, Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
  EXPECT_TRUE(contains(b, v2(0, 0.005)));
  EXPECT_FALSE(contains(b, v2(0, 0.02)));
  EXPECT_TRUE(contains(b, v2(0.9, 0.8)));
  EXPECT_FALSE(contains(b, v2(1.1, 0)));
}
