#include "mcflow/solver.hpp"

#include <gtest/gtest.h>

#include <array>
#include <numbers>
#include <random>

using namespace mcflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Body square() {
  return make_polytope({{v2(1, 0), 1.0}, {v2(-1, 0), 1.0}, {v2(0, 1), 1.0}, {v2(0, -1), 1.0}}, 2);
}

/// Lattice field with the given values on every node of the body's grid.
template <typename F>
ValueField field_on(const Body& body, double h, F&& fn) {
  ValueField f;
  f.grid = build_grid(body, h);
  f.values.resize(f.grid.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = fn(f.grid.point(i));
  return f;
}

const SolveResult& disc_solve() {
  static const SolveResult r = [] {
    SchemeConfig cfg;
    cfg.h = 1.0 / 32.0;
    return solve_body(make_ball(Vec::Zero(2), 1.0), cfg);
  }();
  return r;
}

}  // namespace

TEST(BuildGrid, CoversTheBodyWithMaskedNodes) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  const Grid g = build_grid(disc, 0.125);
  std::size_t interior = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.point(i);
    if (g.mask[i] == NodeKind::Interior) {
      ++interior;
      EXPECT_LT(x.norm(), 1.0 + 1e-12);
    }
    if (g.mask[i] == NodeKind::Outside) {
      EXPECT_GT(x.norm(), 1.0 - 1e-12);
    }
  }
  EXPECT_GT(interior, 150u);  // about pi / h^2 = 201 nodes
}

TEST(SolveBody, RejectsStepBelowSpacing) {
  SchemeConfig cfg;
  cfg.h = 0.1;
  cfg.eps = 0.05;
  EXPECT_THROW(solve_body(make_ball(Vec::Zero(2), 1.0), cfg), std::invalid_argument);
}

TEST(DppOperator, ZeroFieldGainsOneStepInTheDeepInterior) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  SchemeConfig cfg;
  cfg.h = 1.0 / 16.0;
  cfg.eps = 0.125;
  const ValueField zero = field_on(disc, cfg.h, [](const Vec&) { return 0.0; });
  const std::vector<double> out = dpp_operator(disc, zero, cfg);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (zero.grid.mask[i] != NodeKind::Interior) continue;
    const double r = zero.grid.point(i).norm();
    if (r < 1.0 - cfg.eps - 1e-9) {
      EXPECT_NEAR(out[i], cfg.eps * cfg.eps, 1e-12);
      ++checked;
    } else {
      // Shortened exit steps credit at most eps^2.
      EXPECT_LE(out[i], cfg.eps * cfg.eps + 1e-12);
      EXPECT_GE(out[i], 0.0);
    }
  }
  EXPECT_GT(checked, 400u);
}

TEST(DppOperator, IsMonotone) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  SchemeConfig cfg;
  cfg.h = 1.0 / 16.0;
  cfg.eps = 0.25;
  cfg.refine_dirs = false;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    ValueField u = field_on(disc, cfg.h, [&](const Vec&) { return u01(rng); });
    ValueField v = u;
    for (std::size_t i = 0; i < v.values.size(); ++i)
      if (v.grid.mask[i] == NodeKind::Interior) v.values[i] += 0.3 * u01(rng);
    const auto tu = dpp_operator(disc, u, cfg);
    const auto tv = dpp_operator(disc, v, cfg);
    for (std::size_t i = 0; i < tu.size(); ++i) EXPECT_LE(tu[i], tv[i] + 1e-12);
  }
}

TEST(Residual, VanishesForTheExactDiscSolution) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  const ValueField exact = field_on(disc, 1.0 / 32.0, [](const Vec& x) { return 1.0 - x.squaredNorm(); });
  const ValueField zero = field_on(disc, 1.0 / 32.0, [](const Vec&) { return 0.0; });
  std::size_t checked = 0;
  for (std::size_t i = 0; i < exact.values.size(); ++i) {
    if (exact.grid.mask[i] != NodeKind::Interior) continue;
    const Vec x = exact.grid.point(i);
    if (x.norm() < 0.2 || x.norm() > 0.9) continue;
    EXPECT_NEAR(residual(exact, i), 0.0, 1e-9);
    EXPECT_NEAR(residual(zero, i), -1.0, 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 1000u);
}

TEST(SolveBody, DiscMatchesOneMinusRSquared) {
  const SolveResult& r = disc_solve();
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(r.field.interpolate(Vec::Zero(2)), 1.0, 0.08);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.field.values.size(); ++i) {
    if (r.field.grid.mask[i] == NodeKind::Outside) continue;
    const Vec x = r.field.grid.point(i);
    if (x.norm() > 0.9) continue;
    worst = std::max(worst, std::abs(r.field.values[i] - (1.0 - x.squaredNorm())));
  }
  EXPECT_LE(worst, 0.1);
}

TEST(SolveBody, DiscIsRotationallySymmetric) {
  const SolveResult& r = disc_solve();
  for (double rad : {0.25, 0.5, 0.75}) {
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < 16; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 16.0;
      const double u = r.field.interpolate(v2(rad * std::cos(a), rad * std::sin(a)));
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    EXPECT_LE(hi - lo, 0.03) << "radius " << rad;
  }
}

TEST(SolveBody, ValuesStayBetweenZeroAndTheBallBound) {
  const SolveResult& r = disc_solve();
  for (std::size_t i = 0; i < r.field.values.size(); ++i) {
    if (r.field.grid.mask[i] == NodeKind::Outside) continue;
    EXPECT_GE(r.field.values[i], -1e-12);
    EXPECT_LE(r.field.values[i], 1.0 + 1e-9);  // squared radius of the enclosing ball
  }
}

TEST(SolveHierarchical, SquareHasTheSymmetriesOfTheSquare) {
  SchemeConfig cfg;
  cfg.h = 1.0 / 16.0;
  const HierarchicalSolve hs = solve_any(square(), cfg);
  const ValueField& u = hs.top();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> c(-0.95, 0.95);
  for (int s = 0; s < 200; ++s) {
    const double x = c(rng), y = c(rng);
    const double ref = u.interpolate(v2(x, y));
    EXPECT_NEAR(u.interpolate(v2(y, x)), ref, 1e-10);
    EXPECT_NEAR(u.interpolate(v2(-x, y)), ref, 1e-10);
    EXPECT_NEAR(u.interpolate(v2(x, -y)), ref, 1e-10);
  }
}

TEST(SolveHierarchical, EquilateralTriangleCentroid) {
  // For the triangle of side s the centroid value is sqrt(3) s^2 / (4 pi).
  const double s = 1.0;
  const std::vector<Vec> v{v2(0, 0), v2(s, 0), v2(0.5 * s, 0.5 * std::sqrt(3.0) * s)};
  SchemeConfig cfg;
  cfg.h = 1.0 / 64.0;
  const HierarchicalSolve hs = solve_any(make_polytope_from_vertices(v), cfg);
  const Vec centroid = (v[0] + v[1] + v[2]) / 3.0;
  const double expected = std::sqrt(3.0) * s * s / (4.0 * std::numbers::pi);
  EXPECT_NEAR(hs.top().interpolate(centroid), expected, 0.04 * expected);
}

TEST(RefineStudy, ReportsOneRowPerSpacing) {
  SchemeConfig cfg;
  const auto rows = refine_study(make_ball(Vec::Zero(2), 1.0), {0.25, 0.125}, {Vec::Zero(2)}, cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].h, 0.25);
  EXPECT_EQ(rows[1].h, 0.125);
  ASSERT_EQ(rows[1].values.size(), 1u);
  ASSERT_EQ(rows[1].diffs.size(), 1u);
  EXPECT_NEAR(rows[1].diffs[0], std::abs(rows[1].values[0] - rows[0].values[0]), 1e-15);
}

TEST(SolveHierarchical, SimplexFacetsAgreeUnderOrderedRelabelling) {
  std::vector<Vec> v;
  for (int i = 0; i < 4; ++i) v.push_back(Vec::Unit(4, i));
  SchemeConfig cfg;
  cfg.h = 1.0 / 16.0;
  const Body simplex = make_polytope_from_vertices(v);
  const HierarchicalSolve hs = solve_hierarchical(simplex, cfg);
  std::vector<const ValueField*> facets(4, nullptr);  // facet {x_a = 0}
  for (const auto& [key, f] : hs.fields) {
    if (key.size() != 3) continue;
    Vec sum = Vec::Zero(4);
    for (int k : key) sum += simplex.polytope().vertices[static_cast<std::size_t>(k)];
    for (int a = 0; a < 4; ++a)
      if (sum[a] == 0.0) facets[static_cast<std::size_t>(a)] = &f;
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      // Coordinate map: a -> b, the others in increasing order.
      std::array<int, 4> perm{};
      perm[static_cast<std::size_t>(a)] = b;
      for (int i = 0, j = 0; i < 4; ++i) {
        if (i == a) continue;
        if (j == b) ++j;
        perm[static_cast<std::size_t>(i)] = j++;
      }
      const ValueField& fa = *facets[static_cast<std::size_t>(a)];
      const ValueField& fb = *facets[static_cast<std::size_t>(b)];
      ASSERT_EQ(fa.values.size(), fb.values.size());
      for (std::size_t i = 0; i < fa.values.size(); ++i) {
        if (fa.grid.mask[i] == NodeKind::Outside) continue;
        const Vec x = fa.grid.point(i);
        Vec y(4);
        for (int c = 0; c < 4; ++c) y[perm[static_cast<std::size_t>(c)]] = x[c];
        EXPECT_NEAR(fb.interpolate(y), fa.values[i], 1e-10);
      }
    }
}

TEST(SolveBody, BallStaysBelowTheBoundIn3d) {
  SchemeConfig cfg;
  cfg.h = 0.125;
  const SolveResult r = solve_body(make_ball(Vec::Zero(3), 1.0), cfg);
  for (std::size_t i = 0; i < r.field.values.size(); ++i) {
    if (r.field.grid.mask[i] == NodeKind::Outside) continue;
    EXPECT_LE(r.field.values[i], 1.0 - r.field.grid.point(i).squaredNorm() + 1e-12);
    EXPECT_GE(r.field.values[i], 0.0);
  }
  EXPECT_NEAR(r.field.interpolate(Vec::Zero(3)), 1.0, 0.1);
}

TEST(SolveBody, DiscUnionTouchingPointIsNotAbsorbing) {
  // Moving along the line of centres shows v(0, 0) >= 1; the spurious
  // solution 1 - (|x| - 1)^2 - y^2 vanishes there.
  const Body u = make_union({make_ball(v2(1, 0), 1.0), make_ball(v2(-1, 0), 1.0)});
  SchemeConfig cfg;
  cfg.h = 1.0 / 16.0;
  const SolveResult r = solve_body(u, cfg);
  const std::size_t origin = r.field.grid.linear({static_cast<int>(-r.field.grid.origin[0]), static_cast<int>(-r.field.grid.origin[1])});
  EXPECT_EQ(r.field.grid.mask[origin], NodeKind::Interior);
  EXPECT_GE(r.field.values[origin], 0.9);
  EXPECT_GE(r.field.interpolate(v2(1, 0)), 0.9);
}
