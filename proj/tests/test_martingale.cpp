#include "mcflow/martingale.hpp"
#include "mcflow/solver.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace mcflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

/// Record only start and exit; the horizon is long enough that truncation
/// has negligible probability for unit-scale bodies.
const EulerOptions kExitOnly{50.0, 0};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(Rotation, RadiusGrowsAsSqrtOfTime) {
  auto rng = path_rng(1, 0);
  const Vec x0 = v3(0.3, 0.4, 0.7);
  const Vec w1 = Vec::Unit(3, 0), w2 = Vec::Unit(3, 1);
  const PathSample p = simulate_rotation_exact(x0, Vec::Zero(3), w1, w2, {0.0, 0.1, 0.5, 1.0}, rng);
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    const Vec& x = p.states[i];
    EXPECT_NEAR(std::hypot(x[0], x[1]), std::sqrt(0.25 + p.times[i]), 1e-12);
    EXPECT_NEAR(x[2], 0.7, 1e-15);
  }
}

TEST(Rotation, ExitTimeIsDeterministic) {
  auto rng = path_rng(2, 0);
  const PathSample p = rotation_exit(v2(0.6, 0.0), Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1), 1.0, rng);
  EXPECT_NEAR(p.exit_time, 0.64, 1e-15);
  EXPECT_NEAR(p.exit_point.norm(), 1.0, 1e-12);
}

TEST(Rotation, AngleVarianceIsLogOfRadiusRatio) {
  // From rho0 = 1 over [0, 0.5]: the angle increment is N(0, log 1.5).
  constexpr int n = 40000;
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) {
    auto rng = path_rng(3, static_cast<std::uint64_t>(i));
    const PathSample p = simulate_rotation_exact(v2(1, 0), Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1), {0.0, 0.5}, rng);
    angles.push_back(std::atan2(p.states.back()[1], p.states.back()[0]));
  }
  double var = 0.0;
  for (double a : angles) var += a * a;
  var /= n;
  // Wrapping into (-pi, pi] is negligible at standard deviation 0.64.
  EXPECT_NEAR(var, std::log(1.5), 0.03 * std::log(1.5));
}

TEST(ExitStatistics, SummarizesTheSample) {
  const ExitStats s = exit_statistics(std::vector<double>{4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(s.n_paths, 5u);
  EXPECT_DOUBLE_EQ(s.min, 1.0);
  EXPECT_DOUBLE_EQ(s.max, 5.0);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.essinf_estimate, 1.0);
  EXPECT_NEAR(s.stderr_mean, std::sqrt(2.5 / 5.0), 1e-12);
}

TEST(Euler, IsotropicDiscMeanExitTime) {
  // With a = I/2 the mean exit time from the unit disc solves Delta v / 4 = -1,
  // v = 1 - |x|^2.
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  const auto paths = simulate_paths(IsotropicBM{}, disc, v2(0.3, 0.0), 1e-3, 4000, 7, 0, kExitOnly);
  std::vector<double> taus, qv;
  Vec mean_exit = Vec::Zero(2);
  for (const auto& p : paths) {
    ASSERT_TRUE(p.exited);
    taus.push_back(p.exit_time);
    qv.push_back(p.quadratic_variation);
    mean_exit += p.exit_point / static_cast<double>(paths.size());
    EXPECT_NEAR(p.exit_point.norm(), 1.0, 1e-9);
  }
  const ExitStats s = exit_statistics(taus);
  EXPECT_NEAR(s.mean, 0.91, 4.0 * s.stderr_mean + 0.02);
  // The realized quadratic variation equals the exit time for a trace-one control.
  EXPECT_NEAR(mean_of(qv), s.mean, 0.01 * s.mean);
  // Optional stopping: the exit point averages to the start.
  EXPECT_LE((mean_exit - v2(0.3, 0.0)).norm(), 0.05);
}

TEST(Euler, SegmentBrownianMotion) {
  // Along [-1, 1]: E tau = 1 - x0^2 from x0.
  const Body seg = make_segment(v2(-1, 0), v2(1, 0));
  const auto paths = simulate_paths(SegmentBM{v2(-1, 0), v2(1, 0)}, seg, v2(0.5, 0.0), 1e-3, 4000, 8, 0, kExitOnly);
  std::vector<double> taus;
  for (const auto& p : paths) {
    taus.push_back(p.exit_time);
    EXPECT_NEAR(p.exit_point[1], 0.0, 1e-12);
    EXPECT_NEAR(std::abs(p.exit_point[0]), 1.0, 1e-9);
  }
  const ExitStats s = exit_statistics(taus);
  EXPECT_NEAR(s.mean, 0.75, 4.0 * s.stderr_mean + 0.02);
}

TEST(Euler, RotationPlaneExitsAtDeterministicTime) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  const auto paths = simulate_paths(RotationPlane{Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1)}, disc, v2(0.6, 0.0), 1e-4, 50, 9, 0,
                                    kExitOnly);
  for (const auto& p : paths) EXPECT_NEAR(p.exit_time, 0.64, 0.01);
}

TEST(Paths, AreReproducibleAndThreadIndependent) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  const auto a = simulate_paths(IsotropicBM{}, disc, v2(0, 0), 1e-3, 16, 42, 1, kExitOnly);
  const auto b = simulate_paths(IsotropicBM{}, disc, v2(0, 0), 1e-3, 16, 42, 4, kExitOnly);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].exit_time, b[i].exit_time);
}

class SolvedDisc : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SchemeConfig cfg;
    cfg.h = 1.0 / 32.0;
    solve_ = new SolveResult(solve_body(make_ball(Vec::Zero(2), 1.0), cfg));
  }
  static void TearDownTestSuite() {
    delete solve_;
    solve_ = nullptr;
  }
  static SolveResult* solve_;
};
SolveResult* SolvedDisc::solve_ = nullptr;

TEST_F(SolvedDisc, KernelControlIsTangential) {
  const ControlLaw law = synthesize_control(solve_->field);
  for (const Vec& x : {v2(0.5, 0.0), v2(0.0, -0.4), v2(0.3, 0.3)}) {
    bool fallback = false;
    // On a fitted field H is rarely singular to rank_tol, so the maximizing
    // tangent is used; in the plane it spans the same line as the kernel.
    const Mat l = diffusion_factor(law, x, fallback);
    const Mat a = l * l.transpose();
    const Vec t = v2(-x[1], x[0]).normalized();
    EXPECT_LE((a - t * t.transpose()).norm(), 0.1) << x.transpose();
  }
}

TEST_F(SolvedDisc, ControlledExitTimeTracksTheValue) {
  const Body disc = make_ball(Vec::Zero(2), 1.0);
  const ControlLaw law = synthesize_control(solve_->field);
  const Vec x0 = v2(0.5, 0.0);
  const auto paths = simulate_paths(law, disc, x0, 1e-4, 200, 10, 0, kExitOnly);
  std::vector<double> taus;
  for (const auto& p : paths) taus.push_back(p.exit_time);
  const ExitStats s = exit_statistics(taus);
  EXPECT_NEAR(s.min, 0.75, 0.05);
  EXPECT_NEAR(s.max, 0.75, 0.05);
}

TEST(Cascade, StartAtAVertexExitsImmediately) {
  const Body square =
      make_polytope({{v2(1, 0), 1.0}, {v2(-1, 0), 1.0}, {v2(0, 1), 1.0}, {v2(0, -1), 1.0}}, 2);
  SchemeConfig cfg;
  cfg.h = 0.125;
  const HierarchicalSolve hs = solve_any(square, cfg);
  const CascadeResult r = simulate_cascade(square, &hs.fields, v2(1, 1), 1e-3, 10, 1);
  EXPECT_EQ(r.stats.max, 0.0);
  const CascadeResult e = simulate_cascade(square, &hs.fields, v2(1, 0.5), 1e-3, 10, 1);
  EXPECT_EQ(e.stats.max, 0.0);
}

TEST(Cascade, DiscUnionFromTheTouchingPointLastsAtLeastOne) {
  // Brownian motion along the line of centres, then the exact rotation from
  // a centre: tau = theta + 1.
  const Body u = make_union({make_ball(v2(1, 0), 1.0), make_ball(v2(-1, 0), 1.0)});
  const CascadeResult r = simulate_cascade(u, nullptr, v2(0, 0), 1e-4, 500, 3);
  EXPECT_GE(r.stats.min, 1.0);
  // E theta = 1 for Brownian motion on [-1, 1] from 0.
  EXPECT_NEAR(r.stats.mean, 2.0, 4.0 * r.stats.stderr_mean + 0.01);
  // Off the line of centres a boundary point still exits at once.
  const CascadeResult b = simulate_cascade(u, nullptr, v2(1, 1), 1e-4, 10, 3);
  EXPECT_EQ(b.stats.max, 0.0);
}
