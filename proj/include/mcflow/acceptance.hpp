#pragma once

// Acceptance suites. Each suite runs one block of end-to-end checks and
// appends numbered results to a Context; the criterion number groups
// sub-checks that together decide one acceptance criterion. Tolerances are
// fixed here and printed with every result.

#include "mcflow/geometry.hpp"
#include "mcflow/martingale.hpp"
#include "mcflow/nonlinearity.hpp"
#include "mcflow/solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace mcflow::acceptance {

struct Check {
  int criterion = 0;
  std::string name;
  std::string measured;
  std::string expected;
  bool pass = false;
  double seconds = 0.0;
};

struct Context {
  std::uint64_t seed = 20240917;
  int threads = 0;
  std::ostream* log = nullptr;  ///< progress and per-check lines
  std::vector<Check> checks;

  std::map<std::string, HierarchicalSolve> solves;  ///< shared between suites

  void add(Check c) {
    if (log) {
      *log << (c.pass ? "  [pass] " : "  [FAIL] ") << "#" << c.criterion << " " << c.name << ": " << c.measured
           << " (expected " << c.expected << ")";
      if (c.seconds > 0.0) *log << " [" << fmt(c.seconds, "%.1f") << " s]";
      *log << std::endl;
    }
    checks.push_back(std::move(c));
  }
  void note(const std::string& s) const {
    if (log) *log << "  " << s << std::endl;
  }

  static std::string fmt(double v, const char* f = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
  }
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline std::string g(double v) { return Context::fmt(v); }

inline Mat random_symmetric(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n01(rng);
  return 0.5 * (a + a.transpose());
}

/// Eigenvalues sorted descending, from the general (non-symmetric) solver so
/// that the oracle does not share code with sym_eigen.
inline std::vector<double> oracle_eigenvalues(const Mat& m) {
  Eigen::EigenSolver<Mat> es(m, false);
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < m.rows(); ++i) ev.push_back(es.eigenvalues()[i].real());
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

/// Brute-force F(p, M): -1/2 max of y^T M y over `samples` random unit y
/// orthogonal to p.
inline double sampled_F(const Vec& p, const Mat& m, int samples, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  const Vec n = p.normalized();
  double best = -std::numeric_limits<double>::infinity();
  Vec y(p.size());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = n01(rng);
    y -= y.dot(n) * n;
    const double len2 = y.squaredNorm();
    if (len2 < 1e-24) continue;
    best = std::max(best, y.dot(m * y) / len2);
  }
  return -0.5 * best;
}

/// 0 <= u <= r^2 + 1e-9 at every node of every field in the solve.
inline void bound_check(Context& ctx, const std::string& label, const Body& body, const HierarchicalSolve& hs) {
  const double r2 = sq(enclosing_ball(body).radius);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  // Outside nodes hold extension data for interpolation, not values of u.
  for (const auto& [key, f] : hs.fields)
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (f.grid.mask[i] == NodeKind::Outside) continue;
      lo = std::min(lo, f.values[i]);
      hi = std::max(hi, f.values[i]);
    }
  ctx.add({10, "field bound, " + label, "min " + g(lo) + ", max " + g(hi), "0 <= u <= r^2 + 1e-9 = " + g(r2 + 1e-9),
           lo >= 0.0 && hi <= r2 + 1e-9, 0.0});
}

inline void mean_exit_check(Context& ctx, const std::string& label, const Body& body, const ExitStats& s) {
  const double r2 = sq(enclosing_ball(body).radius);
  ctx.add({10, "mean exit bound, " + label, "mean " + g(s.mean) + " +- " + g(s.stderr_mean) + " (n=" + std::to_string(s.n_paths) + ")",
           "<= r^2 + 3 stderr = " + g(r2 + 3.0 * s.stderr_mean), s.mean <= r2 + 3.0 * s.stderr_mean, 0.0});
}

inline Body unit_disc() { return make_ball(Vec::Zero(2), 1.0); }

inline Body square_body() {
  return make_polytope({{Vec::Unit(2, 0), 1.0}, {-Vec::Unit(2, 0), 1.0}, {Vec::Unit(2, 1), 1.0}, {-Vec::Unit(2, 1), 1.0}}, 2);
}

/// The regular 3-simplex as the standard simplex conv(e_1, ..., e_4) in R^4.
inline Body simplex_body() {
  std::vector<Vec> v;
  for (int i = 0; i < 4; ++i) v.push_back(Vec::Unit(4, i));
  return make_polytope_from_vertices(v);
}

inline Body disc_union_body() {
  return make_union({make_ball(Vec::Unit(2, 0), 1.0), make_ball(-Vec::Unit(2, 0), 1.0)});
}

/// [-1, 1]^2 intersected with |y| <= 0.01 + x^2.
inline Body cusp_body() {
  const Polynomial upper{{{1.0, {0, 1}}, {-1.0, {2, 0}}, {-0.01, {0, 0}}}};
  const Polynomial lower{{{-1.0, {0, 1}}, {-1.0, {2, 0}}, {-0.01, {0, 0}}}};
  return make_semialgebraic({upper, lower}, Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
}

inline Body segment_discs_body() {
  Vec a(3), b(3);
  a << -1, 0, 0;
  b << 1, 0, 0;
  Mat yz = Mat::Zero(3, 2);
  yz(1, 0) = 1.0;
  yz(2, 1) = 1.0;
  return make_union({make_segment(a, b), make_ball(a, 1.0, yz), make_ball(b, 1.0, yz)});
}

/// Solves (or fetches) a named body at the given scheme settings.
inline const HierarchicalSolve& cached_solve(Context& ctx, const std::string& key, const Body& body, SchemeConfig cfg,
                                             double* seconds = nullptr) {
  if (auto it = ctx.solves.find(key); it != ctx.solves.end()) {
    if (seconds) *seconds = -1.0;
    return it->second;
  }
  cfg.threads = ctx.threads;
  ctx.note("solving " + key + " ...");
  Stopwatch sw;
  HierarchicalSolve hs = body.is_polytope() ? solve_hierarchical(body, cfg) : solve_any(body, cfg);
  if (seconds) *seconds = sw.seconds();
  const auto& rep = hs.reports.at(hs.top_key);
  ctx.note("  " + key + ": " + std::to_string(rep.sweeps) + " sweeps, converged " + (rep.converged ? "yes" : "no") + ", " +
           g(sw.seconds()) + " s");
  bound_check(ctx, key, body, hs);
  return ctx.solves.emplace(key, std::move(hs)).first->second;
}

inline std::string runtime_text(double s) { return s < 0.0 ? "cached" : g(s) + " s"; }

}  // namespace detail

// ---------------------------------------------------------------------------

/// Criterion 1: envelope algebra on random (p, M).
inline void suite_envelopes(Context& ctx) {
  detail::Stopwatch sw;
  std::mt19937_64 rng(ctx.seed);
  std::uniform_int_distribution<int> dim(2, 4);
  std::normal_distribution<double> n01;
  constexpr int kPairs = 10000;
  constexpr int kSampledPairs = 500;
  constexpr int kSamples = 40000;
  double sandwich_excess = 0.0, upper_err = 0.0, lower_err = 0.0, sampled_err = 0.0;
  for (int i = 0; i < kPairs; ++i) {
    const int d = dim(rng);
    const Mat m = detail::random_symmetric(d, rng);
    Vec p(d);
    for (int c = 0; c < d; ++c) p[c] = n01(rng);
    const auto ev = detail::oracle_eigenvalues(m);
    const double f = eval_F(p, m);
    sandwich_excess = std::max({sandwich_excess, -0.5 * ev[0] - f, f - (-0.5 * ev[1])});
    upper_err = std::max(upper_err, std::abs(eval_F_upper(Vec::Zero(d), m) - (-0.5 * ev[1])));
    lower_err = std::max(lower_err, std::abs(eval_F(Vec::Zero(d), m) - (-0.5 * ev[0])));
    if (i < kSampledPairs) sampled_err = std::max(sampled_err, std::abs(detail::sampled_F(p, m, kSamples, rng) - f));
  }
  const double t = sw.seconds();
  ctx.add({1, "sandwich -l1/2 <= F <= -l2/2 (10^4 pairs, d in 2..4)", "worst violation " + detail::g(sandwich_excess),
           "<= 1e-10", sandwich_excess <= 1e-10, 0.0});
  ctx.add({1, "F*(0, M) = -l2/2", "max error " + detail::g(upper_err), "<= 1e-12", upper_err <= 1e-12, 0.0});
  ctx.add({1, "F_*(0, M) = F(0, M) = -l1/2", "max error " + detail::g(lower_err), "<= 1e-12", lower_err <= 1e-12, 0.0});
  ctx.add({1, "sampled-direction oracle (500 pairs x 4*10^4 directions)", "max |F - oracle| " + detail::g(sampled_err),
           "<= 1e-3", sampled_err <= 1e-3, 0.0});
  ctx.add({1, "envelope suite runtime", detail::g(t) + " s", "< 10 s", t < 10.0, t});
}

/// Criteria 2, 3 and 11: ball solves against 1 - |x|^2.
inline void suite_ball(Context& ctx) {
  {
    SchemeConfig cfg;
    cfg.h = 1.0 / 64.0;
    double secs = 0.0;
    const auto& hs = detail::cached_solve(ctx, "disc h=1/64", detail::unit_disc(), cfg, &secs);
    const ValueField& f = hs.top();
    double worst = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (f.grid.mask[i] == NodeKind::Outside) continue;
      const Vec x = f.grid.point(i);
      if (x.norm() <= 0.9) worst = std::max(worst, std::abs(f.values[i] - (1.0 - x.squaredNorm())));
    }
    const double u0 = f.interpolate(Vec::Zero(2));
    ctx.add({2, "disc max |u - (1 - |x|^2)| over |x| <= 0.9", detail::g(worst), "<= 0.05", worst <= 0.05, 0.0});
    ctx.add({2, "disc u(0)", detail::g(u0), "in [0.95, 1.05]", u0 >= 0.95 && u0 <= 1.05, 0.0});
    ctx.add({2, "disc solve runtime", detail::runtime_text(secs), "< 60 s", secs < 60.0, std::max(secs, 0.0)});
    const auto& rep = hs.reports.at(hs.top_key);
    ctx.add({11, "disc residual median |F(Du, D2u) - 1|", detail::g(rep.residual_median) + " over " + std::to_string(rep.residual_count) + " nodes",
             "<= 0.15", rep.residual_median <= 0.15 && rep.residual_count > 0, 0.0});
  }
  {
    SchemeConfig cfg;
    cfg.h = 1.0 / 32.0;
    double secs = 0.0;
    const auto& hs = detail::cached_solve(ctx, "ball d=3 h=1/32", make_ball(Vec::Zero(3), 1.0), cfg, &secs);
    const double u0 = hs.top().interpolate(Vec::Zero(3));
    ctx.add({3, "3-ball |u(0) - 1|", detail::g(std::abs(u0 - 1.0)) + " (u(0) = " + detail::g(u0) + ")", "<= 0.08",
             std::abs(u0 - 1.0) <= 0.08, 0.0});
    ctx.add({3, "3-ball solve runtime", detail::runtime_text(secs), "< 600 s", secs < 600.0, std::max(secs, 0.0)});
  }
}

/// Criterion 4: the exact rotation sampler.
inline void suite_rotation(Context& ctx) {
  detail::Stopwatch sw;
  std::mt19937_64 rng(ctx.seed + 4);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> times;
  for (int i = 0; i <= 200; ++i) times.push_back(0.01 * i);
  double worst_rho = 0.0, worst_off = 0.0, worst_exit = 0.0, worst_exit_radius = 0.0;
  constexpr int kPaths = 1000;
  for (int k = 0; k < kPaths; ++k) {
    // A random plane through a random centre in R^3.
    Mat a(3, 2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = n01(rng);
    const Mat q = Eigen::HouseholderQR<Mat>(a).householderQ() * Mat::Identity(3, 2);
    const Vec w1 = q.col(0), w2 = q.col(1);
    Vec c(3);
    for (int i = 0; i < 3; ++i) c[i] = n01(rng);
    const Vec n = Eigen::Vector3d(w1).cross(Eigen::Vector3d(w2));
    const double r0 = std::sqrt(unif(rng)), th = 2.0 * std::numbers::pi * unif(rng), off = n01(rng);
    const Vec x0 = c + r0 * (std::cos(th) * w1 + std::sin(th) * w2) + off * n;
    auto prng = path_rng(ctx.seed, static_cast<std::uint64_t>(k));
    const PathSample p = simulate_rotation_exact(x0, c, w1, w2, times, prng);
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      const Vec r = p.states[i] - c;
      const double rho2 = sq(w1.dot(r)) + sq(w2.dot(r));
      worst_rho = std::max(worst_rho, std::abs(rho2 - r0 * r0 - p.times[i]));
      worst_off = std::max(worst_off, std::abs(n.dot(r) - off));
    }
    // Exit of the unit disc from |x0| = 0.6.
    const Vec z0 = 0.6 * (std::cos(th) * Vec::Unit(2, 0) + std::sin(th) * Vec::Unit(2, 1));
    const PathSample e = rotation_exit(z0, Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1), 1.0, prng);
    worst_exit = std::max(worst_exit, std::abs(e.exit_time - 0.64));
    worst_exit_radius = std::max(worst_exit_radius, std::abs(e.exit_point.norm() - 1.0));
  }
  ctx.add({4, "|rho(t)^2 - rho0^2 - t| (10^3 paths x 201 times)", detail::g(worst_rho), "<= 1e-12", worst_rho <= 1e-12, 0.0});
  ctx.add({4, "off-plane component drift", detail::g(worst_off), "<= 1e-12", worst_off <= 1e-12, 0.0});
  ctx.add({4, "disc exit time from |x0| = 0.6, max |tau - 0.64|", detail::g(worst_exit), "<= 1e-12", worst_exit <= 1e-12, 0.0});
  ctx.add({4, "disc exit point radius, max ||x| - 1|", detail::g(worst_exit_radius), "<= 1e-12", worst_exit_radius <= 1e-12,
           sw.seconds()});
}

/// Criterion 5: square arrival time under refinement, with the cascade
/// lower bound as an independent cross-check.
inline void suite_square(Context& ctx) {
  const Body sq_body = detail::square_body();
  const double target = 4.0 / std::numbers::pi;
  std::vector<double> values;
  for (int n : {32, 64, 128}) {
    SchemeConfig cfg;
    cfg.h = 1.0 / n;
    const auto& hs = detail::cached_solve(ctx, "square h=1/" + std::to_string(n), sq_body, cfg);
    values.push_back(hs.top().interpolate(Vec::Zero(2)));
    ctx.note("square u(0,0) at h=1/" + std::to_string(n) + ": " + detail::g(values.back()));
  }
  const double rel = std::abs(values.back() - target) / target;
  ctx.add({5, "square u(0,0) at h=1/128", detail::g(values.back()) + " (rel. error " + detail::g(rel) + ")",
           "within 4% of 4/pi = " + detail::g(target), rel <= 0.04, 0.0});
  const double d1 = std::abs(values[1] - values[0]), d2 = std::abs(values[2] - values[1]);
  ctx.add({5, "successive differences decrease", detail::g(d1) + " then " + detail::g(d2), "second < first", d2 < d1, 0.0});

  const auto& hs = ctx.solves.at("square h=1/64");
  const double u = hs.top().interpolate(Vec::Zero(2));
  detail::Stopwatch sw;
  CascadeOptions opt;
  opt.threads = ctx.threads;
  constexpr std::size_t kPaths = 1000;
  const CascadeResult res = simulate_cascade(sq_body, &hs.fields, Vec::Zero(2), 1e-4, kPaths, ctx.seed + 5, opt);
  ctx.add({5, "cascade minimum exit from (0,0), h=1/64, 10^3 paths", detail::g(res.stats.min) + " (ratio " + detail::g(res.stats.min / u) + ")",
           ">= 0.9 u = " + detail::g(0.9 * u), res.stats.min >= 0.9 * u, sw.seconds()});
  detail::mean_exit_check(ctx, "square cascade", sq_body, res.stats);
}

/// Scheme settings of the hierarchical simplex run: the default step
/// eps = sqrt(h). Steps proportional to h were tried and give a larger
/// cascade ratio, but the scheme is then inconsistent (interpolation error
/// h^2 / eps^2 per step stays O(1)) and biased low, about 14% at a triangle
/// centroid.
inline SchemeConfig simplex_config() {
  SchemeConfig cfg;
  cfg.h = 1.0 / 32.0;
  return cfg;
}

/// Criterion 6: the hierarchical simplex solve and its cascade.
inline void suite_simplex(Context& ctx, std::size_t n_paths = 10000) {
  const Body body = detail::simplex_body();
  const SchemeConfig cfg = simplex_config();
  const auto& hs = detail::cached_solve(ctx, "simplex h=1/32", body, cfg);
  const auto& verts = body.polytope().vertices;
  const double eps = cfg.resolved_eps();

  // 2-faces vanish on their edges: nodes within h of an edge.
  double worst_edge = 0.0;
  for (const auto& [key, f] : hs.fields) {
    if (key.size() != 3) continue;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (f.grid.mask[i] == NodeKind::Outside) continue;
      const Vec x = f.grid.point(i);
      double dist = std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        const Vec p = verts[static_cast<std::size_t>(key[static_cast<std::size_t>(a)])];
        const Vec q = verts[static_cast<std::size_t>(key[static_cast<std::size_t>((a + 1) % 3)])];
        const double s = std::clamp((x - p).dot(q - p) / (q - p).squaredNorm(), 0.0, 1.0);
        dist = std::min(dist, (x - p - s * (q - p)).norm());
      }
      if (dist <= cfg.h + 1e-12) worst_edge = std::max(worst_edge, f.values[i]);
    }
  }
  ctx.add({6, "2-face values within h of the edges", "max " + detail::g(worst_edge), "<= eps^2 + 2h = " + detail::g(eps * eps + 2.0 * cfg.h),
           worst_edge <= eps * eps + 2.0 * cfg.h, 0.0});

  // Facet symmetry. The coordinate permutation that maps the vertices of
  // {x_a = 0} in increasing order onto those of {x_b = 0} is a symmetry of
  // the simplex, and the face frames (Gram-Schmidt on projected coordinate
  // axes in index order) are equivariant under it, so the two lattices
  // correspond node for node. A square lattice cannot carry the full
  // symmetry group of a triangle, so a plain swap of x_a and x_b compares
  // different discretizations; that difference is logged for reference.
  auto facet_without = [&](int coord) -> const ValueField& {
    for (const auto& [key, f] : hs.fields) {
      if (key.size() != 3) continue;
      bool has = false;
      for (int v : key) has = has || verts[static_cast<std::size_t>(v)][coord] == 1.0;
      if (!has) return f;
    }
    throw std::logic_error("simplex facet missing");
  };
  auto facet_gap = [&](int a, int b, const std::array<int, 4>& perm) {
    const ValueField& fa = facet_without(a);
    const ValueField& fb = facet_without(b);
    double worst = 0.0;
    for (std::size_t i = 0; i < fa.values.size(); ++i) {
      if (fa.grid.mask[i] == NodeKind::Outside) continue;
      const Vec x = fa.grid.point(i);
      Vec y(4);
      for (int c = 0; c < 4; ++c) y[perm[static_cast<std::size_t>(c)]] = x[c];
      worst = std::max(worst, std::abs(fb.interpolate(y) - fa.values[i]));
    }
    return worst;
  };
  double worst_sym = 0.0, worst_swap = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      std::array<int, 4> ordered{}, swap{0, 1, 2, 3};
      ordered[static_cast<std::size_t>(a)] = b;
      for (int i = 0, j = 0; i < 4; ++i) {
        if (i == a) continue;
        if (j == b) ++j;
        ordered[static_cast<std::size_t>(i)] = j++;
      }
      std::swap(swap[static_cast<std::size_t>(a)], swap[static_cast<std::size_t>(b)]);
      worst_sym = std::max(worst_sym, facet_gap(a, b, ordered));
      worst_swap = std::max(worst_swap, facet_gap(a, b, swap));
    }
  ctx.add({6, "facet fields under the order-preserving vertex relabelling", "max difference " + detail::g(worst_sym), "<= 1e-10",
           worst_sym <= 1e-10, 0.0});
  ctx.note("facet fields under plain coordinate swaps (different lattices): max difference " + detail::g(worst_swap));

  const Vec bary = Vec::Constant(4, 0.25);
  const double u = hs.top().interpolate(bary);
  detail::Stopwatch sw;
  CascadeOptions opt;
  opt.threads = ctx.threads;
  const CascadeResult res = simulate_cascade(body, &hs.fields, bary, 1e-4, n_paths, ctx.seed + 6, opt);
  ctx.add({6, "cascade essinf estimate from the barycenter (" + std::to_string(n_paths) + " paths, dt=1e-4)",
           detail::g(res.stats.essinf_estimate) + " (ratio " + detail::g(res.stats.essinf_estimate / u) + ", q01 " + detail::g(res.stats.q01) +
               ", mean " + detail::g(res.stats.mean) + ")",
           ">= 0.9 u(barycenter) = " + detail::g(0.9 * u), res.stats.essinf_estimate >= 0.9 * u, sw.seconds()});
  detail::mean_exit_check(ctx, "simplex cascade", body, res.stats);
}

/// Criteria 7 and 12: segment-plus-discs cascade and the optimal-drift check.
inline void suite_cascade(Context& ctx, std::size_t drift_paths = 1000) {
  {
    const Body body = detail::segment_discs_body();
    Vec x0(3);
    x0 << 0.5, 0.0, 0.0;
    constexpr double dt = 1e-4;
    detail::Stopwatch sw;
    CascadeOptions opt;
    opt.threads = ctx.threads;
    const CascadeResult res = simulate_cascade(body, nullptr, x0, dt, 10000, ctx.seed + 7, opt);
    ctx.add({7, "segment-plus-discs minimum exit from (0.5,0,0), 10^4 paths",
             detail::g(res.stats.min) + " (mean " + detail::g(res.stats.mean) + ")", "in [1, 1 + 5 dt] = [1, 1.0005]",
             res.stats.min >= 1.0 && res.stats.min <= 1.0 + 5.0 * dt, sw.seconds()});
    detail::mean_exit_check(ctx, "segment-plus-discs", body, res.stats);
  }
  {
    SchemeConfig cfg;
    cfg.h = 1.0 / 64.0;
    const Body disc = detail::unit_disc();
    const auto& hs = detail::cached_solve(ctx, "disc h=1/64", disc, cfg);
    const ValueField& f = hs.top();
    const ControlLaw law = synthesize_control(f);
    EulerOptions eo;
    for (double s : {0.0, 0.3, 0.5}) {
      const Vec x0 = s * Vec::Unit(2, 0);
      const double u0 = f.interpolate(x0);
      detail::Stopwatch sw;
      const auto paths = simulate_paths(law, disc, x0, 1e-4, drift_paths, ctx.seed + 12, ctx.threads, eo);
      double worst = 0.0;
      for (const auto& p : paths) worst = std::max(worst, drift_check(p, f));
      ctx.add({12, "kernel-field drift from x0 = " + detail::g(s) + " e1 (" + std::to_string(drift_paths) + " paths)",
               detail::g(worst) + " (ratio " + detail::g(worst / u0) + ")", "<= 0.05 u(x0) = " + detail::g(0.05 * u0),
               worst <= 0.05 * u0, sw.seconds()});
      detail::mean_exit_check(ctx, "disc kernel field from " + detail::g(s) + " e1", disc, exit_statistics(paths));
    }
  }
}

/// Criterion 9: u(mid) >= min(u(x), u(y)) - C h on grid-snapped triples.
inline void suite_quasiconcavity(Context& ctx) {
  auto run = [&](const std::string& key, const Body& body, std::uint64_t salt) {
    SchemeConfig cfg;
    cfg.h = 1.0 / 64.0;
    const auto& hs = detail::cached_solve(ctx, key, body, cfg);
    const ValueField& f = hs.top();
    const Grid& g = f.grid;
    double gmax = 0.0;
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.mask[i] == NodeKind::Outside) continue;
      nodes.push_back(i);
      if (g.mask[i] == NodeKind::Interior) gmax = std::max(gmax, lattice_gradient_norm(f, i));
    }
    const double r = enclosing_ball(body).radius;
    const double c = 4.0 * r * gmax;
    std::mt19937_64 rng(ctx.seed + salt);
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
    int tested = 0, failures = 0;
    double worst = -std::numeric_limits<double>::infinity();
    while (tested < 10000) {
      const auto ix = g.multi(nodes[pick(rng)]), iy = g.multi(nodes[pick(rng)]);
      std::vector<int> im(ix.size());
      bool even = true;
      for (std::size_t a = 0; a < ix.size(); ++a) {
        even = even && (ix[a] + iy[a]) % 2 == 0;
        im[a] = (ix[a] + iy[a]) / 2;
      }
      if (!even) continue;
      const std::size_t m = g.linear(im);
      if (g.mask[m] == NodeKind::Outside) continue;
      ++tested;
      const double lhs = f.values[m], rhs = std::min(f.values[g.linear(ix)], f.values[g.linear(iy)]);
      worst = std::max(worst, rhs - lhs);
      if (lhs < rhs - c * g.h) ++failures;
    }
    ctx.add({9, key + ": 10^4 grid-snapped triples", std::to_string(failures) + " failures (worst min - mid " + detail::g(worst) + ")",
             "0 failures with slack C h = " + detail::g(c * g.h), failures == 0, 0.0});
  };
  run("disc h=1/64", detail::unit_disc(), 9);
  run("square h=1/64", detail::square_body(), 99);
}

/// Criterion 8: the disc union selects the value function, u(0,0) >= 0.9.
inline void suite_discunion(Context& ctx) {
  SchemeConfig cfg;
  cfg.h = 1.0 / 64.0;
  const auto& hs = detail::cached_solve(ctx, "disc union h=1/64", detail::disc_union_body(), cfg);
  const double u0 = hs.top().interpolate(Vec::Zero(2));
  ctx.add({8, "disc union u(0,0)", detail::g(u0), ">= 0.9 (the spurious solution has 0)", u0 >= 0.9, 0.0});
}

/// Criterion 13: the non-convex body |y| <= 0.01 + x^2 in [-1, 1]^2.
inline void suite_nonconvex(Context& ctx) {
  const Body body = detail::cusp_body();
  // The regression value is taken at (0.75, 0), where the body is 1.1 tall.
  // The maximum sits in the neck at the origin, only 0.02 tall (about one
  // lattice spacing at h = 1/64); its change is logged but not judged.
  const Vec probe = Vec::Unit(2, 0) * 0.75;
  std::vector<double> probes, peaks;
  for (int n : {64, 128}) {
    SchemeConfig cfg;
    cfg.h = 1.0 / n;
    const std::string key = "cusp h=1/" + std::to_string(n);
    const auto& hs = detail::cached_solve(ctx, key, body, cfg);
    const ValueField& f = hs.top();
    double on_boundary = 0.0, outside = -std::numeric_limits<double>::infinity(), peak = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      if (f.grid.mask[i] == NodeKind::Boundary) on_boundary = std::max(on_boundary, std::abs(f.values[i]));
      if (f.grid.mask[i] == NodeKind::Outside) outside = std::max(outside, f.values[i]);
      peak = std::max(peak, f.values[i]);
    }
    const auto& rep = hs.reports.at(hs.top_key);
    ctx.add({13, key + " completes", std::string(rep.converged ? "converged" : "not converged") + " in " + std::to_string(rep.sweeps) + " sweeps",
             "converged", rep.converged, rep.wall_seconds});
    ctx.add({13, key + " zero boundary data", "max |u| on boundary nodes " + detail::g(on_boundary) + ", max outside " + detail::g(outside),
             "0 on the boundary, <= 0 outside", on_boundary == 0.0 && outside <= 0.0, 0.0});
    ctx.note(key + ": u(0.75, 0) = " + detail::g(f.interpolate(probe)) + ", max u = u(0,0) = " + detail::g(peak));
    probes.push_back(f.interpolate(probe));
    peaks.push_back(peak);
  }
  const double rel = std::abs(probes[1] - probes[0]) / probes[1];
  ctx.add({13, "u(0.75, 0) under refinement 1/64 -> 1/128",
           detail::g(probes[0]) + " -> " + detail::g(probes[1]) + " (rel. change " + detail::g(rel) + ")", "within 5%", rel <= 0.05, 0.0});
  ctx.note("max u under refinement 1/64 -> 1/128: " + detail::g(peaks[0]) + " -> " + detail::g(peaks[1]) + " (rel. change " +
           detail::g(std::abs(peaks[1] - peaks[0]) / peaks[1]) + ")");
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"envelopes", "ball",           "square",     "simplex",  "rotation",
                                              "cascade",   "quasiconcavity", "discunion",  "nonconvex"};
  return names;
}

/// Runs one suite by name; throws std::invalid_argument for unknown names.
inline void run_suite(const std::string& name, Context& ctx) {
  if (ctx.log) *ctx.log << "suite " << name << std::endl;
  if (name == "envelopes") return suite_envelopes(ctx);
  if (name == "ball") return suite_ball(ctx);
  if (name == "square") return suite_square(ctx);
  if (name == "simplex") return suite_simplex(ctx);
  if (name == "rotation") return suite_rotation(ctx);
  if (name == "cascade") return suite_cascade(ctx);
  if (name == "quasiconcavity") return suite_quasiconcavity(ctx);
  if (name == "discunion") return suite_discunion(ctx);
  if (name == "nonconvex") return suite_nonconvex(ctx);
  throw std::invalid_argument("unknown suite '" + name + "'");
}

/// Per-criterion verdicts: a criterion passes when all its checks pass.
inline std::map<int, bool> verdicts(const Context& ctx) {
  std::map<int, bool> out;
  for (const auto& c : ctx.checks) {
    auto [it, fresh] = out.emplace(c.criterion, c.pass);
    if (!fresh) it->second = it->second && c.pass;
  }
  return out;
}

}  // namespace mcflow::acceptance
