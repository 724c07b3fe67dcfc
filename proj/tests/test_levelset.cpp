#include "mcflow/levelset.hpp"
#include "mcflow/solver.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mcflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

template <typename F>
ValueField field_on(const Body& body, double h, F&& fn) {
  ValueField f;
  f.grid = build_grid(body, h);
  f.values.resize(f.grid.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = fn(f.grid.point(i));
  return f;
}

}  // namespace

TEST(Levelset, DiscContourIsACircle) {
  const double h = 1.0 / 32.0;
  const ValueField f = field_on(make_ball(Vec::Zero(2), 1.0), h, [](const Vec& x) { return std::max(0.0, 1.0 - x.squaredNorm()); });
  const LevelSet ls = extract_levelset(f, 0.75);
  ASSERT_EQ(ls.polylines.size(), 1u);
  EXPECT_TRUE(ls.polylines[0].closed);
  EXPECT_GT(ls.polylines[0].points.size(), 50u);
  for (const Vec& p : ls.polylines[0].points) EXPECT_NEAR(p.norm(), 0.5, 2.0 * h);
}

TEST(Levelset, SolvedDiscContour) {
  SchemeConfig cfg;
  cfg.h = 1.0 / 32.0;
  const SolveResult r = solve_body(make_ball(Vec::Zero(2), 1.0), cfg);
  const LevelSet ls = extract_levelset(r.field, 0.75);
  ASSERT_EQ(ls.polylines.size(), 1u);
  for (const Vec& p : ls.polylines[0].points) EXPECT_NEAR(p.norm(), 0.5, 0.1);
}

TEST(Levelset, SquareSuperlevelSetIsConvex) {
  // (1 - x^2)(1 - y^2) is log-concave, so its superlevel sets are convex.
  const Body sq = make_polytope({{v2(1, 0), 1.0}, {v2(-1, 0), 1.0}, {v2(0, 1), 1.0}, {v2(0, -1), 1.0}}, 2);
  const ValueField f = field_on(sq, 1.0 / 32.0, [](const Vec& x) { return (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]); });
  const LevelSet ls = extract_levelset(f, 0.4);
  ASSERT_EQ(ls.polylines.size(), 1u);
  const auto& pts = ls.polylines[0].points;
  ASSERT_TRUE(ls.polylines[0].closed);
  const std::size_t n = pts.size();
  int pos = 0, neg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec a = pts[(i + 1) % n] - pts[i];
    const Vec b = pts[(i + 2) % n] - pts[(i + 1) % n];
    const double cross = a[0] * b[1] - a[1] * b[0];
    if (cross > 1e-9) ++pos;
    if (cross < -1e-9) ++neg;
  }
  EXPECT_TRUE(pos == 0 || neg == 0) << pos << " left turns, " << neg << " right turns";
}

TEST(Levelset, MaximumDegeneratesToAPoint) {
  const ValueField f = field_on(make_ball(Vec::Zero(2), 1.0), 0.125, [](const Vec& x) { return std::max(0.0, 1.0 - x.squaredNorm()); });
  const LevelSet ls = extract_levelset(f, f.max_value());
  ASSERT_EQ(ls.polylines.size(), 1u);
  ASSERT_EQ(ls.polylines[0].points.size(), 1u);
  EXPECT_LE(ls.polylines[0].points[0].norm(), 1e-12);
  EXPECT_THROW(extract_levelset(f, f.max_value() + 0.1), std::invalid_argument);
  EXPECT_THROW(extract_levelset(f, -0.1), std::invalid_argument);
}

TEST(Levelset, BallSurfaceIn3d) {
  const double h = 1.0 / 16.0;
  const ValueField f = field_on(make_ball(Vec::Zero(3), 1.0), h, [](const Vec& x) { return std::max(0.0, 1.0 - x.squaredNorm()); });
  const LevelSet ls = extract_levelset(f, 0.75);
  EXPECT_EQ(ls.dim, 3);
  EXPECT_GT(ls.mesh.triangles.size(), 100u);
  for (const Vec& p : ls.mesh.vertices) EXPECT_NEAR(p.norm(), 0.5, 2.0 * h);
  std::ostringstream os;
  write_off(os, ls, f.grid.hull);
  EXPECT_EQ(os.str().rfind("OFF", 0), 0u);
}

TEST(Levelset, PolylineCsvHasOneRowPerPoint) {
  const ValueField f = field_on(make_ball(Vec::Zero(2), 1.0), 0.125, [](const Vec& x) { return std::max(0.0, 1.0 - x.squaredNorm()); });
  const LevelSet ls = extract_levelset(f, 0.5);
  std::ostringstream os;
  write_polylines_csv(os, ls);
  const std::string s = os.str();
  const auto rows = static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  EXPECT_EQ(rows, 2 + ls.polylines[0].points.size());  // level comment and column header
}
