#pragma once

// Monotone semi-Lagrangian scheme for F(grad u, D^2 u) = 1 built on the
// one-step dynamic programming principle
//
//   u(x) = eps^2 + max_sigma min( u~(x + eps sigma), u~(x - eps sigma) ),
//
// where sigma ranges over unit directions and u~ is the multilinear
// interpolant inside the region and the boundary data at the first boundary
// crossing otherwise. Iteration starts from the enclosing-ball bound
// r^2 - |x - c|^2 and proceeds by Jacobi sweeps to a fixed point.

#include "mcflow/directions.hpp"
#include "mcflow/domain.hpp"
#include "mcflow/field.hpp"
#include "mcflow/geometry.hpp"
#include "mcflow/nonlinearity.hpp"
#include "mcflow/parallel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcflow {

struct SchemeConfig {
  double h = 1.0 / 64.0;
  double eps = 0.0;          ///< game step; <= 0 selects sqrt(h)
  int n_dirs = 0;            ///< antipodal pairs; <= 0 selects 32 (2-d) / 128 (3-d)
  bool refine_dirs = true;   ///< local search around the best listed direction
  /// Shorten a step pair that leaves the region so that it stops at the
  /// first crossing and credit its own squared length instead of eps^2.
  bool shorten_exit_steps = true;
  double fp_tol = 0.0;       ///< sup-norm sweep change; <= 0 selects 1e-8 + 1e-4 eps^2
  int max_sweeps = 0;        ///< <= 0 selects ceil(10 r^2 / eps^2)
  int threads = 0;           ///< <= 0 defers to MCFLOW_THREADS, then 1
  double grad_threshold = 0.1;  ///< residual statistics skip |grad u| below this

  double resolved_eps() const { return eps > 0.0 ? eps : std::sqrt(h); }
  double resolved_fp_tol() const {
    const double e = resolved_eps();
    return fp_tol > 0.0 ? fp_tol : 1e-8 + 1e-4 * e * e;
  }
  int resolved_dirs(int k) const { return n_dirs > 0 ? n_dirs : default_direction_count(k); }
  int resolved_max_sweeps(double r) const {
    const double e = resolved_eps();
    return max_sweeps > 0 ? max_sweeps : static_cast<int>(std::ceil(10.0 * r * r / (e * e)));
  }
};

struct SolveReport {
  int sweeps = 0;
  double final_update = 0.0;
  bool converged = false;
  double residual_median = 0.0;
  double residual_p90 = 0.0;
  std::size_t residual_count = 0;
  double wall_seconds = 0.0;
  std::size_t interior_nodes = 0;
  double h = 0.0, eps = 0.0, fp_tol = 0.0;
  int n_dirs = 0, max_sweeps = 0;
  double bound_radius = 0.0;  ///< radius of the enclosing ball used for u0
};

struct SolveResult {
  ValueField field;
  SolveReport report;
};

/// Lattice over the region's affine hull covering its local bounding box
/// padded by 2h, aligned to integer multiples of h in local coordinates.
inline Grid build_grid(const Domain& dom, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("build_grid: h must be positive");
  const int k = dom.dim();
  if (k <= 1) throw std::invalid_argument("build_grid: relative interior has dimension <= 1 (value is identically 0)");
  const Vec lo = dom.extent_lo(), hi = dom.extent_hi();
  if (h >= (hi - lo).norm()) throw std::invalid_argument("build_grid: h larger than the body diameter");
  Grid g;
  g.hull = dom.hull();
  g.h = h;
  g.lo.resize(k);
  g.origin.resize(static_cast<std::size_t>(k));
  g.shape.resize(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    const long i0 = static_cast<long>(std::floor(lo[a] / h + 1e-9)) - 2;
    const long i1 = static_cast<long>(std::ceil(hi[a] / h - 1e-9)) + 2;
    g.origin[static_cast<std::size_t>(a)] = i0;
    g.lo[a] = h * static_cast<double>(i0);
    g.shape[static_cast<std::size_t>(a)] = static_cast<int>(i1 - i0 + 1);
  }
  const std::size_t n = g.size();
  g.mask.resize(n);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    g.mask[i] = dom.classify(g.local_point(i));
    any = any || g.mask[i] == NodeKind::Interior;
  }
  if (!any) throw std::invalid_argument("build_grid: no interior nodes (h too coarse or body has empty interior)");
  return g;
}

inline Grid build_grid(const Body& body, double h) { return build_grid(Domain(body), h); }

namespace detail {

/// Golden-section maximisation of f on [a, b]; returns the best value seen.
template <typename F>
double golden_max(F&& f, double a, double b, int iters, double* arg = nullptr) {
  constexpr double r = 0.6180339887498949;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  double best = std::max(fc, fd), best_x = fc >= fd ? c : d;
  for (int i = 0; i < iters; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
      if (fc > best) best = fc, best_x = c;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
      if (fd > best) best = fd, best_x = d;
    }
  }
  if (arg) *arg = best_x;
  return best;
}

/// One application of the DPP operator on a fixed region and lattice.
template <int K>
class DppKernel {
 public:
  using P = Eigen::Matrix<double, K, 1>;

  DppKernel(const Domain& dom, const Grid& grid, double eps, int n_dirs, bool refine, bool shorten)
      : dom_(dom), grid_(grid), eps_(eps), refine_(refine), shorten_(shorten) {
    if (grid.dim() != K) throw std::logic_error("DppKernel: dimension mismatch");
    for (const auto& d : antipodal_directions(K, n_dirs)) dirs_.push_back(P(d));
    std::size_t stride = 1;
    for (int a = 0; a < K; ++a) {
      stride_[static_cast<std::size_t>(a)] = stride;
      lo_[a] = grid.lo[a];
      n_[static_cast<std::size_t>(a)] = grid.shape[static_cast<std::size_t>(a)];
      stride *= static_cast<std::size_t>(grid.shape[static_cast<std::size_t>(a)]);
    }
    for (int c = 0; c < (1 << K); ++c) {
      std::size_t off = 0;
      for (int a = 0; a < K; ++a)
        if ((c >> a) & 1) off += stride_[static_cast<std::size_t>(a)];
      corner_[static_cast<std::size_t>(c)] = off;
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid.mask[i] == NodeKind::Interior) interior_.push_back(i);
    build_exit_cache();
    memo_.assign(interior_.size(), P::Zero());
  }

  const std::vector<std::size_t>& interior() const { return interior_; }

  P node(std::size_t lin) const { return P(grid_.local_point(lin)); }

  double interp(const double* u, const P& xi) const {
    std::size_t base = 0;
    std::array<double, K> f{};
    for (int a = 0; a < K; ++a) {
      const int n = n_[static_cast<std::size_t>(a)];
      double s = (xi[a] - lo_[a]) / grid_.h;
      s = std::clamp(s, 0.0, static_cast<double>(n - 1));
      int i = static_cast<int>(s);
      if (i >= n - 1) i = n - 2;
      f[static_cast<std::size_t>(a)] = s - i;
      base += stride_[static_cast<std::size_t>(a)] * static_cast<std::size_t>(i);
    }
    double acc = 0.0;
    for (int c = 0; c < (1 << K); ++c) {
      double w = 1.0;
      for (int a = 0; a < K; ++a) w *= ((c >> a) & 1) ? f[static_cast<std::size_t>(a)] : 1.0 - f[static_cast<std::size_t>(a)];
      acc += w * u[base + corner_[static_cast<std::size_t>(c)]];
    }
    return acc;
  }

  /// T[u] at interior node slot s.
  double update(const double* u, std::size_t s) const {
    const std::size_t lin = interior_[s];
    const P x = node(lin);
    const auto* e = exits_.data() + exit_start_[s];
    const auto* e_end = exits_.data() + exit_start_[s + 1];
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    const double e2 = eps_ * eps_;
    const auto nd = static_cast<std::uint32_t>(dirs_.size());
    for (std::uint32_t j = 0; j < nd; ++j) {
      const ExitEntry* ep = nullptr;
      const ExitEntry* em = nullptr;
      if (e != e_end && e->key == 2 * j) ep = e++;
      if (e != e_end && e->key == 2 * j + 1) em = e++;
      double m;
      if (!ep && !em) {
        m = e2 + std::min(interp(u, x + eps_ * dirs_[j]), interp(u, x - eps_ * dirs_[j]));
      } else {
        m = combine(u, x, dirs_[j], ep ? std::optional<Crossing>({ep->t, ep->value}) : std::nullopt,
                    em ? std::optional<Crossing>({em->t, em->value}) : std::nullopt);
      }
      if (m > best) {
        best = m;
        best_j = j;
      }
    }
    if (!refine_) return best;
    // The previous sweep's best direction stays a candidate, so a near-tie
    // between listed directions cannot make the refined value cycle.
    Candidate c{best, dirs_[best_j]};
    const P& prev = memo_[s];
    if (prev.squaredNorm() > 0.0) {
      const double v = pair_value(u, s, x, prev);
      if (v > c.value) c = {v, prev};
    }
    c = refine(u, s, lin, x, c);
    memo_[s] = c.dir;
    return c.value;
  }

  /// Value of the step pair x +- eps sigma, including its time increment.
  double pair_value(const double* u, std::size_t s, const P& x, const P& sigma) const {
    const P yp = x + eps_ * sigma, ym = x - eps_ * sigma;
    if (near_[s]) return combine(u, x, sigma, dom_.exit_crossing(x, yp), dom_.exit_crossing(x, ym));
    return eps_ * eps_ + std::min(interp(u, yp), interp(u, ym));
  }

 private:
  using Crossing = std::pair<double, double>;  // (fraction, boundary value)

  struct ExitEntry {
    std::uint32_t key;  // 2 * direction + (0: plus, 1: minus)
    double t;
    double value;
  };

  double combine(const double* u, const P& x, const P& sigma, const std::optional<Crossing>& cp,
                 const std::optional<Crossing>& cm) const {
    if (!shorten_ || (!cp && !cm)) {
      const double vp = cp ? cp->second : interp(u, x + eps_ * sigma);
      const double vm = cm ? cm->second : interp(u, x - eps_ * sigma);
      return eps_ * eps_ + std::min(vp, vm);
    }
    const double tp = cp ? cp->first : 1.0, tm = cm ? cm->first : 1.0;
    const double t = std::min(tp, tm);
    const double step = t * eps_;
    const double vp = (cp && tp <= t) ? cp->second : interp(u, x + step * sigma);
    const double vm = (cm && tm <= t) ? cm->second : interp(u, x - step * sigma);
    return step * step + std::min(vp, vm);
  }

  void build_exit_cache() {
    exit_start_.assign(interior_.size() + 1, 0);
    near_.assign(interior_.size(), 0);
    for (std::size_t s = 0; s < interior_.size(); ++s) {
      const P x = node(interior_[s]);
      for (std::uint32_t j = 0; j < dirs_.size(); ++j) {
        for (std::uint32_t sg = 0; sg < 2; ++sg) {
          const P y = sg == 0 ? P(x + eps_ * dirs_[j]) : P(x - eps_ * dirs_[j]);
          const auto v = dom_.exit_crossing(x, y);
          if (v) exits_.push_back(ExitEntry{2 * j + sg, v->first, v->second});
          if (!near_[s]) {
            const P y_far = sg == 0 ? P(x + 1.2 * eps_ * dirs_[j]) : P(x - 1.2 * eps_ * dirs_[j]);
            if (v || dom_.exit_value(x, y_far)) near_[s] = 1;
          }
        }
      }
      exit_start_[s + 1] = exits_.size();
    }
  }

  struct Candidate {
    double value;
    P dir;
  };

  /// Local search around `start`: golden-section in angle for k = 2; for
  /// k = 3 a scan of the great circle orthogonal to the lattice gradient,
  /// then golden-section in angle and in tilt toward the gradient.
  Candidate refine(const double* u, std::size_t s, std::size_t lin, const P& x, const Candidate& start) const {
    Candidate best = start;
    if constexpr (K == 2) {
      const double half = std::numbers::pi / static_cast<double>(dirs_.size());
      const double t0 = std::atan2(start.dir[1], start.dir[0]);
      auto f = [&](double t) { return pair_value(u, s, x, P(std::cos(t), std::sin(t))); };
      double t1 = t0;
      const double v = golden_max(f, t0 - half, t0 + half, 14, &t1);
      if (v > best.value) best = {v, P(std::cos(t1), std::sin(t1))};
      return best;
    } else {
      P p;
      for (int a = 0; a < K; ++a) {
        const std::size_t st = stride_[static_cast<std::size_t>(a)];
        p[a] = u[lin + st] - u[lin - st];
      }
      const double pn = p.norm();
      if (!(pn > 1e-12)) return best;
      p /= pn;
      int axis = 0;
      for (int a = 1; a < K; ++a)
        if (std::abs(p[a]) < std::abs(p[axis])) axis = a;
      P ax = P::Zero();
      ax[axis] = 1.0;
      const P e1 = (ax - ax.dot(p) * p).normalized();
      const P e2 = p.cross(e1);
      auto dir = [&](double t, double phi) {
        return P(std::cos(phi) * (std::cos(t) * e1 + std::sin(t) * e2) + std::sin(phi) * p);
      };
      // Start from the given candidate expressed in (angle, tilt) unless a
      // circle sample beats it.
      double t_best = std::atan2(start.dir.dot(e2), start.dir.dot(e1));
      double phi = std::asin(std::clamp(start.dir.dot(p), -1.0, 1.0));
      double circle_best = -std::numeric_limits<double>::infinity(), t_circle = 0.0;
      constexpr int kSamples = 24;
      for (int m = 0; m < kSamples; ++m) {
        const double t = std::numbers::pi * m / kSamples;
        const double v = pair_value(u, s, x, dir(t, 0.0));
        if (v > circle_best) circle_best = v, t_circle = t;
      }
      if (circle_best > best.value) {
        best = {circle_best, dir(t_circle, 0.0)};
        t_best = t_circle;
        phi = 0.0;
      }
      const double dt = std::numbers::pi / kSamples;
      double arg = t_best;
      double v = golden_max([&](double t) { return pair_value(u, s, x, dir(t, phi)); }, t_best - dt, t_best + dt, 10, &arg);
      if (v > best.value) best = {v, dir(arg, phi)}, t_best = arg;
      v = golden_max([&](double f) { return pair_value(u, s, x, dir(t_best, f)); }, phi - 0.25, phi + 0.25, 10, &arg);
      if (v > best.value) best = {v, dir(t_best, arg)}, phi = arg;
      v = golden_max([&](double t) { return pair_value(u, s, x, dir(t, phi)); }, t_best - 0.25 * dt, t_best + 0.25 * dt, 8, &arg);
      if (v > best.value) best = {v, dir(arg, phi)};
      return best;
    }
  }

  const Domain& dom_;
  const Grid& grid_;
  double eps_;
  bool refine_;
  bool shorten_;
  std::vector<P> dirs_;
  std::array<std::size_t, K> stride_{};
  std::array<int, K> n_{};
  P lo_;
  std::array<std::size_t, (1 << K)> corner_{};
  std::vector<std::size_t> interior_;
  std::vector<std::size_t> exit_start_;
  std::vector<ExitEntry> exits_;
  std::vector<std::uint8_t> near_;
  mutable std::vector<P> memo_;  // per interior node, written only by its own update
};

/// Enclosing ball of the region: the body's for the top-level solve, the
/// face's vertex ball for faces.
inline EnclosingBall region_ball(const Domain& dom) {
  if (dom.face() && dom.face()->dim < dom.body().ambient_dim) {
    const auto& poly = dom.body().polytope();
    std::vector<Vec> pts;
    for (int v : dom.face()->vertex_ids) pts.push_back(poly.vertices[static_cast<std::size_t>(v)]);
    Vec lo = pts.front(), hi = pts.front();
    for (const auto& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
    const Vec c = 0.5 * (lo + hi);
    double r = 0.0;
    for (const auto& p : pts) r = std::max(r, (p - c).norm());
    return {c, r};
  }
  return enclosing_ball(dom.body());
}

/// Values of non-interior nodes (boundary data) and the initial interior
/// values from the enclosing-ball bound w = r^2 - |x - c|^2.
///
/// Outside nodes of a non-polytope region only enter through interpolation
/// near the boundary. They hold min(0, w): zero would exceed any extension
/// of w past the sphere, and the interpolation error would lift u above the
/// bound. With min(0, w) the bound is a discrete supersolution (multilinear
/// interpolation of a concave quadratic lies below it), so u <= w follows
/// from monotonicity of the scheme.
inline std::vector<double> initial_values(const Domain& dom, const Grid& grid, const EnclosingBall& ball) {
  std::vector<double> u(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec xi = grid.local_point(i);
    const double w = sq(ball.radius) - (grid.hull.to_global(xi) - ball.center).squaredNorm();
    if (grid.mask[i] == NodeKind::Interior) {
      u[i] = std::max(0.0, w);
    } else if (grid.mask[i] == NodeKind::Outside && !dom.is_polytope()) {
      u[i] = std::min(0.0, w);
    } else {
      u[i] = dom.boundary_value(xi);
    }
  }
  return u;
}

template <int K>
SolveReport iterate(const Domain& dom, const Grid& grid, std::vector<double>& u, const SchemeConfig& cfg,
                    const EnclosingBall& ball) {
  SolveReport rep;
  rep.h = grid.h;
  rep.eps = cfg.resolved_eps();
  rep.fp_tol = cfg.resolved_fp_tol();
  rep.n_dirs = cfg.resolved_dirs(K);
  rep.max_sweeps = cfg.resolved_max_sweeps(ball.radius);
  rep.bound_radius = ball.radius;
  const DppKernel<K> kernel(dom, grid, rep.eps, rep.n_dirs, cfg.refine_dirs, cfg.shorten_exit_steps);
  const auto& interior = kernel.interior();
  rep.interior_nodes = interior.size();
  const int threads = resolve_threads(cfg.threads);
  std::vector<double> next = u;
  std::vector<double> change(interior.size(), 0.0);
  for (int sweep = 1; sweep <= rep.max_sweeps; ++sweep) {
    parallel_for(interior.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t s = b; s < e; ++s) {
        const std::size_t lin = interior[s];
        next[lin] = kernel.update(u.data(), s);
        change[s] = std::abs(next[lin] - u[lin]);
      }
    });
    u.swap(next);
    rep.sweeps = sweep;
    rep.final_update = change.empty() ? 0.0 : *std::max_element(change.begin(), change.end());
    if (rep.final_update <= rep.fp_tol) {
      rep.converged = true;
      break;
    }
  }
  return rep;
}

}  // namespace detail

/// F(grad u, D^2 u) - 1 at a lattice node from central differences at
/// spacing h. Requires the full 3^k stencil to be Interior.
inline double residual(const ValueField& field, std::size_t lin) {
  const Grid& g = field.grid;
  const int k = g.dim();
  const auto idx = g.multi(lin);
  std::vector<std::size_t> stride(static_cast<std::size_t>(k));
  std::size_t st = 1;
  for (int a = 0; a < k; ++a) {
    stride[static_cast<std::size_t>(a)] = st;
    st *= static_cast<std::size_t>(g.shape[static_cast<std::size_t>(a)]);
    if (idx[static_cast<std::size_t>(a)] < 1 || idx[static_cast<std::size_t>(a)] + 1 >= g.shape[static_cast<std::size_t>(a)])
      throw std::out_of_range("residual: stencil leaves the grid");
  }
  // Check the full 3^k neighbourhood.
  int total = 1;
  for (int a = 0; a < k; ++a) total *= 3;
  for (int c = 0; c < total; ++c) {
    long off = 0;
    int cc = c;
    for (int a = 0; a < k; ++a) {
      off += static_cast<long>(cc % 3 - 1) * static_cast<long>(stride[static_cast<std::size_t>(a)]);
      cc /= 3;
    }
    if (g.mask[static_cast<std::size_t>(static_cast<long>(lin) + off)] != NodeKind::Interior)
      throw std::out_of_range("residual: stencil touches a non-interior node");
  }
  const auto& u = field.values;
  const double h = g.h;
  Vec grad(k);
  Mat hess(k, k);
  for (int a = 0; a < k; ++a) {
    const std::size_t sa = stride[static_cast<std::size_t>(a)];
    grad[a] = (u[lin + sa] - u[lin - sa]) / (2.0 * h);
    hess(a, a) = (u[lin + sa] - 2.0 * u[lin] + u[lin - sa]) / (h * h);
    for (int b = a + 1; b < k; ++b) {
      const std::size_t sb = stride[static_cast<std::size_t>(b)];
      hess(a, b) = hess(b, a) =
          (u[lin + sa + sb] - u[lin + sa - sb] - u[lin - sa + sb] + u[lin - sa - sb]) / (4.0 * h * h);
    }
  }
  return eval_F(grad, hess) - 1.0;
}

/// |grad u| at a lattice node by central differences (interior nodes only).
inline double lattice_gradient_norm(const ValueField& field, std::size_t lin) {
  const Grid& g = field.grid;
  const auto idx = g.multi(lin);
  double s2 = 0.0;
  std::size_t st = 1;
  for (int a = 0; a < g.dim(); ++a) {
    const auto n = g.shape[static_cast<std::size_t>(a)];
    const int i = idx[static_cast<std::size_t>(a)];
    if (i >= 1 && i + 1 < n) s2 += sq((field.values[lin + st] - field.values[lin - st]) / (2.0 * g.h));
    st *= static_cast<std::size_t>(n);
  }
  return std::sqrt(s2);
}

/// Absolute residuals over interior nodes with a full interior stencil and
/// |grad u| > grad_threshold.
inline std::vector<double> residual_sample(const ValueField& field, double grad_threshold) {
  std::vector<double> out;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (field.grid.mask[i] != NodeKind::Interior) continue;
    if (lattice_gradient_norm(field, i) <= grad_threshold) continue;
    try {
      out.push_back(std::abs(residual(field, i)));
    } catch (const std::out_of_range&) {
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Solves on the whole body (face == nullptr) or on one polytope face, with
/// boundary data from `lower` for faces of dimension >= 2 on its relative
/// boundary.
inline SolveResult solve_body(const Body& body, const SchemeConfig& cfg, const Face* face = nullptr,
                              const FaceFieldMap* lower = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  Domain dom(body, face, lower);
  if (dom.dim() > 3) throw std::invalid_argument("solve: grid solves are supported in dimensions 2 and 3");
  SolveResult res;
  res.field.grid = build_grid(dom, cfg.h);
  if (cfg.resolved_eps() < cfg.h) throw std::invalid_argument("solve: eps must be at least h");
  dom.set_sample_step(0.25 * cfg.h);
  res.field.face = dom.face();
  const EnclosingBall ball = detail::region_ball(dom);
  res.field.values = detail::initial_values(dom, res.field.grid, ball);
  if (dom.dim() == 2) {
    res.report = detail::iterate<2>(dom, res.field.grid, res.field.values, cfg, ball);
  } else {
    res.report = detail::iterate<3>(dom, res.field.grid, res.field.values, cfg, ball);
  }
  const auto r = residual_sample(res.field, cfg.grad_threshold);
  res.report.residual_count = r.size();
  if (!r.empty()) {
    res.report.residual_median = sorted_quantile(r, 0.5);
    res.report.residual_p90 = sorted_quantile(r, 0.9);
  }
  res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// T[u] for a given field (no iteration); non-interior nodes are returned
/// unchanged. Exposed for operator-level checks (monotonicity, consistency).
inline std::vector<double> dpp_operator(const Body& body, const ValueField& u, const SchemeConfig& cfg,
                                        const FaceFieldMap* lower = nullptr) {
  Domain dom(body, u.face ? &*u.face : nullptr, lower);
  dom.set_sample_step(0.25 * u.grid.h);
  std::vector<double> out = u.values;
  auto run = [&](auto kernel) {
    for (std::size_t s = 0; s < kernel.interior().size(); ++s)
      out[kernel.interior()[s]] = kernel.update(u.values.data(), s);
  };
  const double eps = cfg.resolved_eps();
  if (u.grid.dim() == 2) {
    run(detail::DppKernel<2>(dom, u.grid, eps, cfg.resolved_dirs(2), cfg.refine_dirs, cfg.shorten_exit_steps));
  } else if (u.grid.dim() == 3) {
    run(detail::DppKernel<3>(dom, u.grid, eps, cfg.resolved_dirs(3), cfg.refine_dirs, cfg.shorten_exit_steps));
  } else {
    throw std::invalid_argument("dpp_operator: supported in dimensions 2 and 3");
  }
  return out;
}

struct HierarchicalSolve {
  FaceFieldMap fields;                                 ///< faces of dim >= 2, body included
  std::map<std::vector<int>, SolveReport> reports;
  std::vector<Face> faces;                             ///< solved faces, increasing dimension
  std::vector<int> top_key;                            ///< key of the body's own field

  const ValueField& top() const { return fields.at(top_key); }
};

/// Solves every face of dimension >= 2 in increasing dimension, each with
/// boundary data from the faces already solved; faces of dimension <= 1
/// carry the zero field.
inline HierarchicalSolve solve_hierarchical(const Body& body, const SchemeConfig& cfg) {
  const int top = body.hull.dim();
  const Skeleton sk = skeleton(body, top);
  HierarchicalSolve out;
  for (const auto& f : sk.faces) {
    if (f.dim < 2) continue;
    SolveResult r = solve_body(body, cfg, &f, &out.fields);
    out.reports[f.vertex_ids] = r.report;
    out.fields.emplace(f.vertex_ids, std::move(r.field));
    out.faces.push_back(f);
    if (f.dim == top) out.top_key = f.vertex_ids;
  }
  if (out.top_key.empty()) throw std::invalid_argument("solve_hierarchical: body has dimension <= 1");
  return out;
}

/// Solve for any body: hierarchical for polytopes, direct otherwise.
inline HierarchicalSolve solve_any(const Body& body, const SchemeConfig& cfg) {
  if (body.is_polytope()) return solve_hierarchical(body, cfg);
  HierarchicalSolve out;
  SolveResult r = solve_body(body, cfg);
  out.reports[{}] = r.report;
  out.fields.emplace(std::vector<int>{}, std::move(r.field));
  return out;
}

struct RefineRow {
  double h = 0.0;
  std::vector<double> values;   ///< per probe
  std::vector<double> diffs;    ///< |value - previous row's value| per probe (empty on the first row)
  SolveReport report;
};

/// Solves at each h (decreasing) and records probe values and successive
/// differences.
inline std::vector<RefineRow> refine_study(const Body& body, const std::vector<double>& h_list,
                                           const std::vector<Vec>& probes, SchemeConfig cfg) {
  for (std::size_t i = 1; i < h_list.size(); ++i)
    if (!(h_list[i] < h_list[i - 1])) throw std::invalid_argument("refine_study: h list must be decreasing");
  std::vector<RefineRow> rows;
  for (double h : h_list) {
    cfg.h = h;
    cfg.eps = 0.0;
    const HierarchicalSolve s = solve_any(body, cfg);
    RefineRow row;
    row.h = h;
    row.report = s.reports.at(s.top_key);
    for (const auto& p : probes) row.values.push_back(s.top().interpolate(p));
    if (!rows.empty())
      for (std::size_t j = 0; j < probes.size(); ++j) row.diffs.push_back(std::abs(row.values[j] - rows.back().values[j]));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mcflow
