#pragma once

// Controlled martingales with unit-trace quadratic variation: exact planar
// rotations, Euler-Maruyama paths under a diffusion law a(x), the face
// cascade on polytopes and union pieces, and exit-time statistics.

#include "mcflow/domain.hpp"
#include "mcflow/field.hpp"
#include "mcflow/geometry.hpp"
#include "mcflow/nonlinearity.hpp"
#include "mcflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace mcflow {

/// Rotation about `center` in the plane span{w1, w2}: a = s s^T with s the
/// unit tangent S(x - c)/|S(x - c)|, S = w1 w2^T - w2 w1^T.
struct RotationPlane {
  Vec center;
  Vec w1, w2;
};

/// Kernel-projection control synthesized from a solved field; see
/// synthesize_control.
struct KernelField {
  const ValueField* field = nullptr;
  std::shared_ptr<const DerivativeField> derivs;
  double rank_tol = 1e-6;
  double grad_tol = 0.05;
};

/// Brownian motion along a segment.
struct SegmentBM {
  Vec a, b;
};

/// a = I/d.
struct IsotropicBM {};

/// Per-face kernel fields pasted along the face lattice of a polytope.
struct Cascade {
  const FaceFieldMap* fields = nullptr;
  double rank_tol = 1e-6;
  double grad_tol = 0.05;
};

using ControlLaw = std::variant<RotationPlane, KernelField, SegmentBM, IsotropicBM, Cascade>;

struct PathSample {
  std::vector<double> times;
  std::vector<Vec> states;
  double exit_time = 0.0;
  Vec exit_point;
  bool exited = false;
  double quadratic_variation = 0.0;  ///< realized sum |dX|^2 up to the exit
  std::size_t fallback_events = 0;   ///< steps where the kernel control was unavailable
};

struct ExitStats {
  std::size_t n_paths = 0;
  double min = 0.0, q01 = 0.0, q05 = 0.0, mean = 0.0, max = 0.0;
  double stderr_mean = 0.0;
  /// Sample minimum: an upward-biased estimate of the essential infimum whose
  /// quality depends on n_paths.
  double essinf_estimate = 0.0;
};

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Generator for path `index` of a run seeded with `seed`; independent of
/// scheduling.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

/// Distribution of the normalized Euler increments W with E W = 0,
/// E W W^T = I. Sign increments give |L W|^2 = trace(L L^T) = 1 exactly, so
/// the discrete quadratic variation equals elapsed time on every path;
/// Gaussian increments match it only in mean.
enum class Increments { Sign, Gaussian };

namespace detail {

template <typename Rng>
double draw_increment(Rng& rng, Increments kind) {
  if (kind == Increments::Gaussian) return std::normal_distribution<double>(0.0, 1.0)(rng);
  return (rng() >> 63) ? 1.0 : -1.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Statistics

inline ExitStats exit_statistics(std::vector<double> times) {
  if (times.empty()) throw std::invalid_argument("exit_statistics: empty sample");
  std::sort(times.begin(), times.end());
  ExitStats s;
  s.n_paths = times.size();
  s.min = times.front();
  s.max = times.back();
  s.q01 = sorted_quantile(times, 0.01);
  s.q05 = sorted_quantile(times, 0.05);
  double sum = 0.0;
  for (double t : times) sum += t;
  s.mean = sum / static_cast<double>(times.size());
  if (times.size() > 1) {
    double ss = 0.0;
    for (double t : times) ss += sq(t - s.mean);
    s.stderr_mean = std::sqrt(ss / static_cast<double>(times.size() - 1) / static_cast<double>(times.size()));
  }
  s.essinf_estimate = s.min;
  return s;
}

inline ExitStats exit_statistics(const std::vector<PathSample>& paths) {
  std::vector<double> t;
  t.reserve(paths.size());
  for (const auto& p : paths) t.push_back(p.exit_time);
  return exit_statistics(std::move(t));
}

// ---------------------------------------------------------------------------
// Exact rotation

namespace detail {

inline void check_plane(const Vec& w1, const Vec& w2) {
  if (w1.size() != w2.size() || w1.size() < 2) throw NumericError("rotation plane: dimension mismatch");
  if (std::abs(w1.norm() - 1.0) > 1e-10 || std::abs(w2.norm() - 1.0) > 1e-10 || std::abs(w1.dot(w2)) > 1e-10)
    throw NumericError("rotation plane: basis is not orthonormal");
}

}  // namespace detail

/// Exact-in-law sample of the rotation martingale at the given times
/// (increasing, starting at 0): rho(t)^2 = rho0^2 + t, and the angle
/// increment over [s, t] is N(0, log((rho0^2 + t)/(rho0^2 + s))), uniform
/// when rho0 = s = 0. Components outside the plane stay fixed.
template <typename Rng>
PathSample simulate_rotation_exact(const Vec& x0, const Vec& center, const Vec& w1, const Vec& w2,
                                   const std::vector<double>& t_grid, Rng& rng) {
  detail::check_plane(w1, w2);
  if (x0.size() != w1.size() || center.size() != w1.size()) throw NumericError("rotation: dimension mismatch");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (t_grid[i] < 0.0 || (i > 0 && !(t_grid[i] >= t_grid[i - 1]))) throw NumericError("rotation: times must be increasing and >= 0");
  const Vec r = x0 - center;
  const double a1 = w1.dot(r), a2 = w2.dot(r);
  const Vec off = r - a1 * w1 - a2 * w2;
  const double rho0_sq = a1 * a1 + a2 * a2;
  double theta = std::atan2(a2, a1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  PathSample p;
  double s = 0.0;
  for (double t : t_grid) {
    if (t > s) {
      if (rho0_sq + s == 0.0) {
        theta = uniform(rng);
      } else {
        theta += std::sqrt(std::log((rho0_sq + t) / (rho0_sq + s))) * normal(rng);
      }
    }
    const double rho = std::sqrt(rho0_sq + t);
    p.times.push_back(t);
    p.states.push_back(center + off + rho * (std::cos(theta) * w1 + std::sin(theta) * w2));
    s = t;
  }
  p.quadratic_variation = t_grid.empty() ? 0.0 : t_grid.back();
  return p;
}

/// Exit of the exact rotation from the ball of radius R about `center`
/// within the plane: tau = R^2 - rho0^2 (deterministic), exit angle sampled.
template <typename Rng>
PathSample rotation_exit(const Vec& x0, const Vec& center, const Vec& w1, const Vec& w2, double radius, Rng& rng) {
  const Vec r = x0 - center;
  const double rho0_sq = sq(w1.dot(r)) + sq(w2.dot(r));
  const double tau = std::max(0.0, radius * radius - rho0_sq);
  PathSample p = simulate_rotation_exact(x0, center, w1, w2, {0.0, tau}, rng);
  p.exit_time = tau;
  p.exit_point = p.states.back();
  p.exited = true;
  return p;
}

// ---------------------------------------------------------------------------
// Diffusion laws

namespace detail {

/// Factor L of a PSD matrix (a = L L^T) from its eigen-decomposition.
inline Mat psd_factor(const Mat& a) {
  const SymEigen es = sym_eigen(a);
  int m = 0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (es.values[i] > 1e-12) ++m;
  Mat l(a.rows(), std::max(m, 1));
  l.setZero();
  int c = 0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (es.values[i] > 1e-12) l.col(c++) = std::sqrt(es.values[i]) * es.vectors.col(i);
  return l;
}

/// Local-coordinate factor of the kernel control at local point xi from
/// fitted derivatives. Critical points use the plane of the two largest
/// Hessian eigenvalues (a = (w1 w1^T + w2 w2^T)/2); where H is numerically
/// nonsingular the maximizing tangent direction is used (a = y y^T) and
/// `fallback` is set.
inline Mat kernel_factor_local(const DerivativeField& derivs, const Vec& xi, double rank_tol, double grad_tol,
                               bool& fallback) {
  Vec g;
  Mat hs;
  if (!derivs.at_local(xi, g, hs)) throw NumericError("kernel control: no derivative data near the state");
  fallback = false;
  if (g.norm() < grad_tol) {
    const auto [w1, w2] = critical_rotation_plane(hs);
    Mat l(g.size(), 2);
    l.col(0) = w1 / std::sqrt(2.0);
    l.col(1) = w2 / std::sqrt(2.0);
    return l;
  }
  if (const auto a = kernel_control(g, hs, rank_tol)) return psd_factor(*a);
  fallback = true;
  Mat l(g.size(), 1);
  l.col(0) = argmax_tangent(g, hs);
  return l;
}

}  // namespace detail

/// Factor L (a = L L^T, trace a = 1) of a non-cascade law at x (global).
inline Mat diffusion_factor(const ControlLaw& law, const Vec& x, bool& fallback) {
  fallback = false;
  const int d = static_cast<int>(x.size());
  if (const auto* rp = std::get_if<RotationPlane>(&law)) {
    const Vec r = x - rp->center;
    const double a1 = rp->w1.dot(r), a2 = rp->w2.dot(r);
    const double rho = std::hypot(a1, a2);
    if (rho < 1e-14) {
      Mat l(d, 2);
      l.col(0) = rp->w1 / std::sqrt(2.0);
      l.col(1) = rp->w2 / std::sqrt(2.0);
      return l;
    }
    Mat l(d, 1);
    l.col(0) = (a1 * rp->w2 - a2 * rp->w1) / rho;
    return l;
  }
  if (std::holds_alternative<IsotropicBM>(law)) return Mat::Identity(d, d) / std::sqrt(static_cast<double>(d));
  if (const auto* sb = std::get_if<SegmentBM>(&law)) {
    Mat l(d, 1);
    l.col(0) = (sb->b - sb->a).normalized();
    return l;
  }
  if (const auto* kf = std::get_if<KernelField>(&law)) {
    if (!kf->field || !kf->derivs) throw std::invalid_argument("KernelField: use synthesize_control");
    const AffineHull& hull = kf->field->grid.hull;
    return hull.basis * detail::kernel_factor_local(*kf->derivs, hull.to_local(x), kf->rank_tol, kf->grad_tol, fallback);
  }
  throw std::invalid_argument("diffusion_factor: cascade laws are driven by simulate_cascade");
}

/// Radius, in lattice spacings, of the derivative fit behind kernel-field
/// controls: `requested` if positive, else the default scheme step
/// eps = sqrt(h) expressed in lattice spacings (at least 3).
inline double resolve_fit_radius(double requested, double h) {
  if (requested > 0.0) return requested;
  return std::max(3.0, 1.0 / std::sqrt(h));
}

/// The kernel-field control law of a solved field. Gradient and Hessian come
/// from a local quadratic least-squares fit (fit_derivatives) rather than
/// two-point differences: the scheme determines the field at the scale of
/// its step eps, not of the lattice, and grid-scale roughness would
/// otherwise tilt the control off the level sets.
inline ControlLaw synthesize_control(const ValueField& field, double rank_tol = 1e-6, double grad_tol = 0.05,
                                     double fit_radius = 0.0) {
  if (field.grid.dim() < 2) throw std::invalid_argument("synthesize_control: field must be at least 2-dimensional");
  for (int a = 0; a < field.grid.dim(); ++a)
    if (field.grid.shape[static_cast<std::size_t>(a)] < 5)
      throw std::invalid_argument("synthesize_control: field too coarse for second differences");
  return KernelField{&field, std::make_shared<const DerivativeField>(fit_derivatives(field, resolve_fit_radius(fit_radius, field.grid.h))), rank_tol,
                     grad_tol};
}

// ---------------------------------------------------------------------------
// Euler-Maruyama

struct EulerOptions {
  double max_time = 0.0;  ///< <= 0: 4 r^2 of the enclosing ball (plus 1)
  int record_every = 1;   ///< store every n-th state; 0 stores only start and exit
  Increments increments = Increments::Sign;
};

/// Euler-Maruyama path dX = L(X) sqrt(dt) W (W per `opt.increments`) until the first step that
/// leaves the body; the crossing time is interpolated linearly within the
/// step.
template <typename Rng>
PathSample simulate_euler(const ControlLaw& law, const Body& body, const Vec& x0, double dt, Rng& rng,
                          const EulerOptions& opt = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_euler: dt must be positive");
  if (!contains(body, x0, 1e-9)) throw std::invalid_argument("simulate_euler: x0 outside body");
  const EnclosingBall ball = enclosing_ball(body);
  const double t_max = opt.max_time > 0.0 ? opt.max_time : 4.0 * sq(ball.radius) + 1.0;
  const double sdt = std::sqrt(dt);
  PathSample p;
  Vec x = x0;
  double t = 0.0;
  p.times.push_back(0.0);
  p.states.push_back(x0);
  long step = 0;
  while (t < t_max) {
    bool fb = false;
    const Mat l = diffusion_factor(law, x, fb);
    if (fb) ++p.fallback_events;
    Vec w(l.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = detail::draw_increment(rng, opt.increments);
    const Vec dx = sdt * (l * w);
    const Vec y = x + dx;
    if (!contains(body, y, 1e-12)) {
      const ClipResult c = boundary_clip(body, x, y, 1e-9);
      p.exit_time = t + c.fraction * dt;
      p.exit_point = c.point;
      p.quadratic_variation += sq(c.fraction) * dx.squaredNorm();
      p.exited = true;
      break;
    }
    p.quadratic_variation += dx.squaredNorm();
    x = y;
    t += dt;
    ++step;
    if (opt.record_every > 0 && step % opt.record_every == 0) {
      p.times.push_back(t);
      p.states.push_back(x);
    }
  }
  if (!p.exited) {
    p.exit_time = t;
    p.exit_point = x;
  }
  p.times.push_back(p.exit_time);
  p.states.push_back(p.exit_point);
  return p;
}

/// n independent Euler paths with per-path seeding.
inline std::vector<PathSample> simulate_paths(const ControlLaw& law, const Body& body, const Vec& x0, double dt,
                                              std::size_t n_paths, std::uint64_t seed, int threads = 0,
                                              const EulerOptions& opt = {}) {
  std::vector<PathSample> out(n_paths);
  parallel_for(n_paths, resolve_threads(threads), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto rng = path_rng(seed, i);
      out[i] = simulate_euler(law, body, x0, dt, rng, opt);
    }
  });
  return out;
}

/// max over recorded times t < exit of |u(X(t)) - (u(x0) - t)|.
inline double drift_check(const PathSample& path, const ValueField& field) {
  if (path.states.empty()) throw std::invalid_argument("drift_check: empty path");
  const AffineHull& hull = field.grid.hull;
  auto value = [&](const Vec& x) {
    if (hull.distance(x) > 1e-6) throw std::invalid_argument("drift_check: state outside the field's affine hull");
    const Vec xi = hull.to_local(x);
    for (int a = 0; a < field.grid.dim(); ++a) {
      const double lo = field.grid.lo[a], hi = lo + field.grid.h * (field.grid.shape[static_cast<std::size_t>(a)] - 1);
      if (xi[a] < lo || xi[a] > hi) throw std::invalid_argument("drift_check: state outside the field's grid");
    }
    return field.interpolate_local(xi);
  };
  const double u0 = value(path.states.front());
  double worst = 0.0;
  for (std::size_t i = 0; i < path.states.size(); ++i) {
    if (path.times[i] >= path.exit_time) break;
    worst = std::max(worst, std::abs(value(path.states[i]) - (u0 - path.times[i])));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Cascade

struct CascadeResult {
  ExitStats stats;
  std::vector<double> exit_times;
  std::size_t fallback_events = 0;
  std::size_t switches = 0;  ///< piece changes summed over paths
};

struct CascadeOptions {
  double rank_tol = 1e-6;
  double grad_tol = 0.05;
  double fit_radius = 0.0;  ///< see resolve_fit_radius
  int threads = 0;
  double max_time = 0.0;  ///< <= 0: 4 r^2 + 1
  Increments increments = Increments::Sign;
};

namespace detail {

struct CascadePath {
  double tau = 0.0;
  std::size_t fallback = 0;
  std::size_t switches = 0;
};

/// Polytope cascade: kernel-field Euler steps inside the current face; on
/// reaching the relative boundary continue on the lower face; stop on faces
/// of dimension <= 1.
template <typename Rng>
CascadePath polytope_cascade_path(const Body& body, const FaceFieldMap& fields,
                                  const std::map<std::vector<int>, DerivativeField>& derivs, const Vec& x0, double dt,
                                  const CascadeOptions& opt, double t_max, Rng& rng) {
  const auto& poly = body.polytope();
  const double sdt = std::sqrt(dt);
  CascadePath out;
  Vec x = x0;
  double t = 0.0;
  Face face = face_of(body, x, 1e-9);
  while (face.dim >= 2 && t < t_max) {
    const auto it = fields.find(face.vertex_ids);
    if (it == fields.end()) throw std::invalid_argument("simulate_cascade: missing face field");
    const ValueField& field = it->second;
    const DerivativeField& df = derivs.at(face.vertex_ids);
    const AffineHull& hull = field.grid.hull;
    std::vector<int> free;
    for (std::size_t i = 0; i < poly.halfspaces.size(); ++i)
      if (!std::binary_search(face.active.begin(), face.active.end(), static_cast<int>(i))) free.push_back(static_cast<int>(i));
    Vec xi = hull.to_local(x);
    bool left = false;
    while (t < t_max) {
      bool fb = false;
      const Mat l = kernel_factor_local(df, xi, opt.rank_tol, opt.grad_tol, fb);
      if (fb) ++out.fallback;
      Vec w(l.cols());
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = draw_increment(rng, opt.increments);
      const Vec eta = xi + sdt * (l * w);
      const Vec xg = hull.to_global(xi), yg = hull.to_global(eta);
      double frac = 1.0;
      for (int i : free) {
        const auto& h = poly.halfspaces[static_cast<std::size_t>(i)];
        const double s0 = h.slack(xg), s1 = h.slack(yg);
        if (s1 < 0.0) frac = std::min(frac, std::max(0.0, s0) / (std::max(0.0, s0) - s1));
      }
      if (frac < 1.0) {
        t += frac * dt;
        x = xg + frac * (yg - xg);
        left = true;
        break;
      }
      xi = eta;
      t += dt;
    }
    if (!left) break;
    face = face_of(body, x, 1e-9);
    ++out.switches;
  }
  out.tau = t;
  return out;
}

/// Centres of two balls of the union that both contain x, with x strictly
/// between them on their line of centres.
inline std::optional<std::pair<Vec, Vec>> touching_bridge(const std::vector<Body>& parts, const Vec& x, double tol) {
  std::vector<const BallShape*> balls;
  for (const auto& b : parts)
    if (b.kind() == BodyKind::Ball && b.hull.dim() >= 2 && contains(b, x, tol)) balls.push_back(&std::get<BallShape>(b.shape));
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j) {
      const Vec& a = balls[i]->center;
      const Vec& c = balls[j]->center;
      const Vec ac = c - a;
      const double u = (x - a).dot(ac) / ac.squaredNorm();
      if (u > tol && u < 1.0 - tol && (a + u * ac - x).norm() <= tol) return std::make_pair(a, c);
    }
  return std::nullopt;
}

/// Brownian motion along the segment [a, b] from x (on it) until an endpoint
/// is hit; advances t and returns the endpoint reached, or the last state
/// when t reaches t_max first.
template <typename Rng>
Vec segment_walk(const Vec& a, const Vec& b, const Vec& x, double dt, double t_max, Increments incr, double& t, Rng& rng) {
  const Vec ab = b - a;
  const double len = ab.norm();
  const double sdt = std::sqrt(dt);
  double u = (x - a).dot(ab) / (len * len);
  while (t < t_max) {
    const double v = u + sdt * draw_increment(rng, incr) / len;
    if (v <= 0.0 || v >= 1.0) {
      const double edge = v <= 0.0 ? 0.0 : 1.0;
      t += (edge - u) / (v - u) * dt;
      u = edge;
      break;
    }
    u = v;
    t += dt;
  }
  return a + u * ab;
}

/// Union cascade: each part carries its optimal law (balls: exact rotation;
/// segments: Brownian motion to an endpoint); the path continues in the
/// highest-dimensional part whose relative interior contains the current
/// point. A point in no relative interior that lies strictly between the
/// centres of two balls containing it (a touching point) is bridged by
/// Brownian motion along the line of centres until a centre is reached;
/// otherwise the path exits.
template <typename Rng>
CascadePath union_cascade_path(const std::vector<Body>& parts, const Vec& x0, double dt, double t_max,
                               Increments incr, Rng& rng) {
  constexpr double tol = 1e-9;
  auto rel_interior = [&](const Body& b, const Vec& x) {
    if (b.kind() == BodyKind::Ball) {
      const auto& s = std::get<BallShape>(b.shape);
      if (b.hull.distance(x) > tol) return false;
      return (b.hull.basis.transpose() * (x - s.center)).norm() < s.radius - tol;
    }
    if (b.kind() == BodyKind::Segment) {
      const auto& s = std::get<SegmentShape>(b.shape);
      const Vec ab = s.b - s.a;
      const double u = (x - s.a).dot(ab) / ab.squaredNorm();
      return (s.a + u * ab - x).norm() <= tol && u > tol && u < 1.0 - tol;
    }
    throw std::invalid_argument("simulate_cascade: union parts must be balls or segments");
  };
  CascadePath out;
  Vec x = x0;
  double t = 0.0;
  while (t < t_max) {
    const Body* cur = nullptr;
    for (const auto& b : parts)
      if (rel_interior(b, x) && (!cur || b.hull.dim() > cur->hull.dim())) cur = &b;
    if (!cur) {
      const auto bridge = touching_bridge(parts, x, tol);
      if (!bridge) break;
      ++out.switches;
      x = segment_walk(bridge->first, bridge->second, x, dt, t_max, incr, t, rng);
      continue;
    }
    ++out.switches;
    if (cur->kind() == BodyKind::Ball) {
      const auto& s = std::get<BallShape>(cur->shape);
      if (cur->hull.dim() < 2) throw std::invalid_argument("simulate_cascade: ball part of dimension < 2");
      const Vec r = cur->hull.basis.transpose() * (x - s.center);
      // Rotation plane: through x when off-centre, else the first two axes.
      Vec w1 = cur->hull.basis.col(0), w2 = cur->hull.basis.col(1);
      if (r.norm() > 1e-14 && cur->hull.dim() > 2) {
        w1 = cur->hull.basis * r.normalized();
        Vec c2 = cur->hull.basis.col(0);
        if (std::abs(c2.dot(w1)) > 0.9) c2 = cur->hull.basis.col(1);
        w2 = (c2 - c2.dot(w1) * w1).normalized();
      }
      const PathSample p = rotation_exit(x, s.center, w1, w2, s.radius, rng);
      t += p.exit_time;
      x = p.exit_point;
      continue;
    }
    const auto& seg = std::get<SegmentShape>(cur->shape);
    x = segment_walk(seg.a, seg.b, x, dt, t_max, incr, t, rng);
  }
  out.tau = t;
  return out;
}

}  // namespace detail

/// Exit statistics of the pasted optimal martingale: for polytopes the
/// kernel-field cascade through the solved face fields, for unions of balls
/// and segments the per-part laws, for a single ball the exact rotation.
inline CascadeResult simulate_cascade(const Body& body, const FaceFieldMap* fields, const Vec& x0, double dt,
                                      std::size_t n_paths, std::uint64_t seed, const CascadeOptions& opt = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_cascade: dt must be positive");
  if (n_paths == 0) throw std::invalid_argument("simulate_cascade: n_paths must be positive");
  if (!contains(body, x0, 1e-9)) throw std::invalid_argument("simulate_cascade: x0 outside body");
  const double t_max = opt.max_time > 0.0 ? opt.max_time : 4.0 * sq(enclosing_ball(body).radius) + 1.0;
  std::vector<detail::CascadePath> res(n_paths);
  std::vector<Body> parts;
  if (body.kind() == BodyKind::Union) {
    parts = std::get<UnionShape>(body.shape).parts;
  } else if (body.kind() == BodyKind::Ball || body.kind() == BodyKind::Segment) {
    parts = {body};
  } else if (!body.is_polytope()) {
    throw std::invalid_argument("simulate_cascade: needs a polytope, ball, segment or union of balls and segments");
  } else if (!fields) {
    throw std::invalid_argument("simulate_cascade: polytope cascade needs face fields");
  }
  std::map<std::vector<int>, DerivativeField> derivs;
  if (body.is_polytope())
    for (const auto& [key, f] : *fields) derivs.emplace(key, fit_derivatives(f, resolve_fit_radius(opt.fit_radius, f.grid.h)));
  parallel_for(n_paths, resolve_threads(opt.threads), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto rng = path_rng(seed, i);
      res[i] = body.is_polytope() ? detail::polytope_cascade_path(body, *fields, derivs, x0, dt, opt, t_max, rng)
                                  : detail::union_cascade_path(parts, x0, dt, t_max, opt.increments, rng);
    }
  });
  CascadeResult out;
  for (const auto& r : res) {
    out.exit_times.push_back(r.tau);
    out.fallback_events += r.fallback;
    out.switches += r.switches;
  }
  out.stats = exit_statistics(out.exit_times);
  return out;
}

}  // namespace mcflow
