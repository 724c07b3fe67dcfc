#pragma once

// Compact bodies: membership, boundary clipping, affine hulls and, for convex
// polytopes, the face lattice (faces, dimensions, k-skeletons).

#include "mcflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mcflow {

/// Raised for invalid body descriptions (empty, unbounded, inconsistent
/// dimensions, unsupported queries).
class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// {x : normal . x <= offset}, with |normal| = 1.
struct HalfSpace {
  Vec normal;
  double offset = 0.0;

  double slack(const Vec& x) const { return offset - normal.dot(x); }
};

/// Smallest affine subspace containing a set: base + span(basis columns).
/// `base` is the orthogonal projection of the origin onto the subspace.
struct AffineHull {
  Vec base;
  Mat basis;  // ambient x dim, orthonormal columns

  int dim() const { return static_cast<int>(basis.cols()); }
  int ambient_dim() const { return static_cast<int>(base.size()); }
  Vec to_local(const Vec& x) const { return basis.transpose() * (x - base); }
  Vec to_global(const Vec& xi) const { return base + basis * xi; }
  double distance(const Vec& x) const {
    const Vec r = x - base;
    return (r - basis * (basis.transpose() * r)).norm();
  }
  Vec project(const Vec& x) const { return to_global(to_local(x)); }
};

/// Affine hull of a finite point set.
inline AffineHull affine_hull_of(const std::vector<Vec>& pts) {
  if (pts.empty()) throw GeometryError("affine hull of empty point set");
  const auto d = pts.front().size();
  Vec mean = Vec::Zero(d);
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat diffs(d, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) diffs.col(static_cast<Eigen::Index>(i)) = pts[i] - mean;
  AffineHull hull;
  hull.basis = span_basis(diffs, 1e-9);
  hull.base = mean - hull.basis * (hull.basis.transpose() * mean);
  for (Eigen::Index i = 0; i < hull.base.size(); ++i)
    if (std::abs(hull.base[i]) < 1e-15) hull.base[i] = 0.0;
  return hull;
}

inline AffineHull full_hull(int d) {
  return AffineHull{Vec::Zero(d), Mat::Identity(d, d)};
}

/// A face of a convex polytope. `active` is the closed active set: every
/// halfspace index tight on the whole face.
struct Face {
  std::vector<int> active;
  int dim = 0;
  AffineHull hull;
  std::vector<int> vertex_ids;

  bool operator==(const Face& o) const { return vertex_ids == o.vertex_ids; }
};

struct Skeleton {
  int k = 0;
  std::vector<Face> faces;
};

/// c * prod x_i^e_i
struct Monomial {
  double coef = 0.0;
  std::vector<int> exponents;
};

/// Polynomial p; the set it describes is {p(x) <= 0}.
struct Polynomial {
  std::vector<Monomial> terms;

  double eval(const Vec& x) const {
    double s = 0.0;
    for (const auto& t : terms) {
      double m = t.coef;
      for (std::size_t i = 0; i < t.exponents.size(); ++i)
        for (int e = 0; e < t.exponents[i]; ++e) m *= x[static_cast<Eigen::Index>(i)];
      s += m;
    }
    return s;
  }
};

class Body;

struct PolytopeShape {
  std::vector<HalfSpace> halfspaces;
  std::vector<Vec> vertices;
  std::vector<std::vector<int>> vertex_tight;  // sorted halfspace indices per vertex
};

/// Ball of the given radius inside the body's affine hull (a disc in a plane
/// of R^3 has a 2-column hull basis).
struct BallShape {
  Vec center;
  double radius = 0.0;
};

struct SegmentShape {
  Vec a, b;
};

/// Cartesian product; coordinates split as (first factor, second factor).
struct ProductShape {
  std::vector<Body> factors;
};

struct UnionShape {
  std::vector<Body> parts;
};

/// {x in box : p_j(x) <= 0 for all j}
struct SemialgebraicShape {
  std::vector<Polynomial> inequalities;
};

enum class BodyKind { Polytope, Ball, Segment, Product, Union, Semialgebraic };

class Body {
 public:
  std::variant<PolytopeShape, BallShape, SegmentShape, ProductShape, UnionShape, SemialgebraicShape> shape;
  int ambient_dim = 0;
  AffineHull hull;
  Vec box_lo, box_hi;

  BodyKind kind() const { return static_cast<BodyKind>(shape.index()); }
  bool is_polytope() const { return kind() == BodyKind::Polytope; }
  const PolytopeShape& polytope() const {
    if (!is_polytope()) throw GeometryError("body is not a polytope");
    return std::get<PolytopeShape>(shape);
  }
  bool is_convex() const;
};

inline const char* kind_name(BodyKind k) {
  switch (k) {
    case BodyKind::Polytope: return "polytope";
    case BodyKind::Ball: return "ball";
    case BodyKind::Segment: return "segment";
    case BodyKind::Product: return "product";
    case BodyKind::Union: return "union";
    case BodyKind::Semialgebraic: return "semialgebraic";
  }
  return "?";
}

inline bool Body::is_convex() const {
  switch (kind()) {
    case BodyKind::Polytope:
    case BodyKind::Ball:
    case BodyKind::Segment: return true;
    case BodyKind::Product: {
      const auto& f = std::get<ProductShape>(shape).factors;
      return std::all_of(f.begin(), f.end(), [](const Body& b) { return b.is_convex(); });
    }
    default: return false;
  }
}

namespace detail {

inline double face_tol(double tol, double offset) { return tol * (1.0 + std::abs(offset)); }

inline std::vector<int> tight_set(const std::vector<HalfSpace>& hs, const Vec& x, double tol) {
  std::vector<int> out;
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (std::abs(hs[i].slack(x)) <= face_tol(tol, hs[i].offset)) out.push_back(static_cast<int>(i));
  return out;
}

inline bool includes(const std::vector<int>& big, const std::vector<int>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

/// Calls f(idx) for every size-k subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(int n, int k, F&& f) {
  if (k > n || k < 0) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline void set_box_from_points(Body& b, const std::vector<Vec>& pts) {
  b.box_lo = pts.front();
  b.box_hi = pts.front();
  for (const auto& p : pts) {
    b.box_lo = b.box_lo.cwiseMin(p);
    b.box_hi = b.box_hi.cwiseMax(p);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Construction

/// Polytope from halfspace rows {x : n.x <= b}. Normals are normalised;
/// vertices are enumerated and the polytope is checked to be nonempty and
/// bounded.
inline Body make_polytope(const std::vector<HalfSpace>& raw, int dim) {
  if (dim < 1) throw GeometryError("polytope: dimension must be positive");
  if (raw.empty()) throw GeometryError("polytope: no halfspaces (unbounded)");
  std::vector<HalfSpace> hs;
  for (const auto& h : raw) {
    if (h.normal.size() != dim) throw GeometryError("polytope: halfspace dimension mismatch");
    const double n = h.normal.norm();
    if (!(n > 1e-14)) throw GeometryError("polytope: zero normal");
    hs.push_back(HalfSpace{h.normal / n, h.offset / n});
  }

  // Enumerate vertices of P intersected with a large box; a vertex on the box
  // means P is unbounded.
  double scale = 1.0;
  for (const auto& h : hs) scale = std::max(scale, std::abs(h.offset));
  const double big = 1e6 * scale;
  std::vector<HalfSpace> all = hs;
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e[i] = 1.0;
    all.push_back(HalfSpace{e, big});
    all.push_back(HalfSpace{-e, big});
  }
  const int m = static_cast<int>(hs.size());
  const int mall = static_cast<int>(all.size());
  std::vector<Vec> verts;
  bool touches_box = false;
  const double vtol = 1e-9;
  detail::for_each_subset(mall, dim, [&](const std::vector<int>& idx) {
    Mat a(dim, dim);
    Vec rhs(dim);
    for (int r = 0; r < dim; ++r) {
      a.row(r) = all[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])].normal.transpose();
      rhs[r] = all[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])].offset;
    }
    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() < dim) return;
    const Vec x = lu.solve(rhs);
    if (!x.allFinite()) return;
    for (const auto& h : all)
      if (h.slack(x) < -detail::face_tol(vtol, h.offset)) return;
    for (const auto& v : verts)
      if ((v - x).norm() <= 1e-9 * (1.0 + x.norm())) return;
    for (int r = 0; r < dim; ++r)
      if (idx[static_cast<std::size_t>(r)] >= m) touches_box = true;
    for (int i = m; i < mall; ++i)
      if (std::abs(all[static_cast<std::size_t>(i)].slack(x)) <= 1e-6 * big) touches_box = true;
    verts.push_back(x);
  });
  if (verts.empty()) throw GeometryError("polytope: empty (infeasible halfspaces)");
  if (touches_box) throw GeometryError("polytope: unbounded");

  PolytopeShape shape;
  shape.halfspaces = hs;
  // Snap vertex coordinates to the nearest integer/simple value when within
  // round-off, so symmetric inputs produce symmetric vertex lists.
  for (auto& v : verts)
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = std::round(v[i] * 1e9) / 1e9;
      if (std::abs(v[i] - r) < 1e-13) v[i] = r;
    }
  std::sort(verts.begin(), verts.end(), [](const Vec& a, const Vec& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  for (const auto& v : verts) shape.vertex_tight.push_back(detail::tight_set(hs, v, 1e-9));
  shape.vertices = verts;

  Body b;
  b.ambient_dim = dim;
  b.hull = verts.size() == 1 ? AffineHull{verts.front(), Mat(dim, 0)} : affine_hull_of(verts);
  if (b.hull.dim() == dim) b.hull = full_hull(dim);
  detail::set_box_from_points(b, verts);
  b.shape = std::move(shape);
  return b;
}

/// Polytope as the convex hull of a point set (any affine dimension).
inline Body make_polytope_from_vertices(const std::vector<Vec>& pts) {
  if (pts.empty()) throw GeometryError("polytope: no vertices");
  const int d = static_cast<int>(pts.front().size());
  for (const auto& p : pts)
    if (p.size() != d) throw GeometryError("polytope: vertex dimension mismatch");
  const AffineHull hull = affine_hull_of(pts);
  const int k = hull.dim();
  std::vector<HalfSpace> hs;
  // Facets in local coordinates: hyperplanes through k affinely independent
  // points with every point on one side.
  std::vector<Vec> loc;
  for (const auto& p : pts) loc.push_back(hull.to_local(p));
  auto add_unique = [&](const HalfSpace& h) {
    for (const auto& g : hs)
      if ((g.normal - h.normal).norm() < 1e-9 && std::abs(g.offset - h.offset) < 1e-9 * (1.0 + std::abs(h.offset))) return;
    hs.push_back(h);
  };
  if (k >= 1) {
    std::vector<HalfSpace> local_facets;
    detail::for_each_subset(static_cast<int>(loc.size()), k, [&](const std::vector<int>& idx) {
      Vec n;
      if (k == 1) {
        n = Vec::Ones(1);
      } else {
        Mat diffs(k - 1, k);
        for (int r = 1; r < k; ++r)
          diffs.row(r - 1) = (loc[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] - loc[static_cast<std::size_t>(idx[0])]).transpose();
        Eigen::FullPivLU<Mat> lu(diffs);
        if (lu.rank() < k - 1) return;
        n = lu.kernel().col(0);
        n.normalize();
      }
      const double b = n.dot(loc[static_cast<std::size_t>(idx[0])]);
      double lo = 0.0, hi = 0.0;
      for (const auto& q : loc) {
        lo = std::min(lo, n.dot(q) - b);
        hi = std::max(hi, n.dot(q) - b);
      }
      const double tol = 1e-9 * (1.0 + std::abs(b));
      if (hi <= tol) {
        local_facets.push_back(HalfSpace{n, b});
      } else if (lo >= -tol) {
        local_facets.push_back(HalfSpace{-n, -b});
      }
    });
    for (const auto& f : local_facets) {
      const Vec gn = hull.basis * f.normal;
      add_unique(HalfSpace{gn, f.offset + gn.dot(hull.base)});
    }
  }
  // Equalities pinning the affine hull.
  if (k < d) {
    const Mat full = Mat::Identity(d, d) - hull.basis * hull.basis.transpose();
    const Mat comp = span_basis(full);
    for (Eigen::Index j = 0; j < comp.cols(); ++j) {
      const Vec c = comp.col(j);
      hs.push_back(HalfSpace{c, c.dot(hull.base)});
      hs.push_back(HalfSpace{-c, -c.dot(hull.base)});
    }
  }
  return make_polytope(hs, d);
}

/// Ball of radius r about `center`. With an empty `basis` the ball is full
/// dimensional; otherwise it lies in center + span(basis).
inline Body make_ball(const Vec& center, double radius, const Mat& basis = Mat()) {
  const int d = static_cast<int>(center.size());
  if (d < 1) throw GeometryError("ball: empty center");
  if (!(radius > 0.0)) throw GeometryError("ball: radius must be positive");
  Body b;
  b.ambient_dim = d;
  if (basis.size() == 0) {
    b.hull = full_hull(d);
  } else {
    if (basis.rows() != d) throw GeometryError("ball: basis dimension mismatch");
    const Mat ob = span_basis(basis);
    b.hull.basis = ob;
    b.hull.base = center - ob * (ob.transpose() * center);
  }
  b.box_lo.resize(d);
  b.box_hi.resize(d);
  for (int i = 0; i < d; ++i) {
    const double ext = radius * b.hull.basis.row(i).norm();
    b.box_lo[i] = center[i] - ext;
    b.box_hi[i] = center[i] + ext;
  }
  b.shape = BallShape{center, radius};
  return b;
}

inline Body make_segment(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw GeometryError("segment: dimension mismatch");
  if (!((a - b).norm() > 0.0)) throw GeometryError("segment: endpoints coincide");
  Body out;
  out.ambient_dim = static_cast<int>(a.size());
  out.hull = affine_hull_of({a, b});
  out.box_lo = a.cwiseMin(b);
  out.box_hi = a.cwiseMax(b);
  out.shape = SegmentShape{a, b};
  return out;
}

/// Product of two bodies. Products of polytopes are polytopes; other products
/// keep both factors and expose no face lattice.
inline Body make_product(const Body& first, const Body& second) {
  const int d1 = first.ambient_dim, d2 = second.ambient_dim, d = d1 + d2;
  if (first.is_polytope() && second.is_polytope()) {
    std::vector<HalfSpace> hs;
    for (const auto& h : first.polytope().halfspaces) {
      Vec n = Vec::Zero(d);
      n.head(d1) = h.normal;
      hs.push_back(HalfSpace{n, h.offset});
    }
    for (const auto& h : second.polytope().halfspaces) {
      Vec n = Vec::Zero(d);
      n.tail(d2) = h.normal;
      hs.push_back(HalfSpace{n, h.offset});
    }
    return make_polytope(hs, d);
  }
  Body b;
  b.ambient_dim = d;
  b.hull.base = Vec(d);
  b.hull.base << first.hull.base, second.hull.base;
  b.hull.basis = Mat::Zero(d, first.hull.dim() + second.hull.dim());
  b.hull.basis.topLeftCorner(d1, first.hull.dim()) = first.hull.basis;
  b.hull.basis.bottomRightCorner(d2, second.hull.dim()) = second.hull.basis;
  b.box_lo = Vec(d);
  b.box_hi = Vec(d);
  b.box_lo << first.box_lo, second.box_lo;
  b.box_hi << first.box_hi, second.box_hi;
  b.shape = ProductShape{{first, second}};
  return b;
}

inline Body make_union(const std::vector<Body>& parts) {
  if (parts.empty()) throw GeometryError("union: no parts");
  const int d = parts.front().ambient_dim;
  std::vector<Vec> pts;
  Mat dirs(d, 0);
  for (const auto& p : parts) {
    if (p.ambient_dim != d) throw GeometryError("union: dimension mismatch");
    pts.push_back(p.box_lo);
    pts.push_back(p.box_hi);
  }
  Body b;
  b.ambient_dim = d;
  // Affine hull of the union: span of the parts' hulls and base offsets.
  std::vector<Vec> gen;
  for (const auto& p : parts) {
    gen.push_back(p.hull.base);
    for (int j = 0; j < p.hull.dim(); ++j) gen.push_back(p.hull.base + p.hull.basis.col(j));
  }
  b.hull = affine_hull_of(gen);
  if (b.hull.dim() == d) b.hull = full_hull(d);
  detail::set_box_from_points(b, pts);
  b.shape = UnionShape{parts};
  return b;
}

/// {x in [lo, hi] : p_j(x) <= 0}. Assumed full dimensional.
inline Body make_semialgebraic(const std::vector<Polynomial>& ineqs, const Vec& lo, const Vec& hi) {
  const int d = static_cast<int>(lo.size());
  if (hi.size() != d || d < 1) throw GeometryError("semialgebraic: box dimension mismatch");
  if ((hi - lo).minCoeff() <= 0.0) throw GeometryError("semialgebraic: empty box");
  for (const auto& p : ineqs)
    for (const auto& t : p.terms)
      if (static_cast<int>(t.exponents.size()) != d) throw GeometryError("semialgebraic: monomial dimension mismatch");
  Body b;
  b.ambient_dim = d;
  b.hull = full_hull(d);
  b.box_lo = lo;
  b.box_hi = hi;
  b.shape = SemialgebraicShape{ineqs};
  return b;
}

// ---------------------------------------------------------------------------
// Queries

inline bool contains(const Body& body, const Vec& x, double tol = 1e-9) {
  if (x.size() != body.ambient_dim) throw GeometryError("contains: dimension mismatch");
  switch (body.kind()) {
    case BodyKind::Polytope: {
      for (const auto& h : body.polytope().halfspaces)
        if (h.slack(x) < -tol) return false;
      return true;
    }
    case BodyKind::Ball: {
      const auto& s = std::get<BallShape>(body.shape);
      const Vec r = x - s.center;
      if (body.hull.dim() == body.ambient_dim) return r.squaredNorm() <= sq(s.radius + tol);
      const Vec in = body.hull.basis.transpose() * r;
      if ((r - body.hull.basis * in).norm() > tol) return false;
      return in.squaredNorm() <= sq(s.radius + tol);
    }
    case BodyKind::Segment: {
      const auto& s = std::get<SegmentShape>(body.shape);
      const Vec ab = s.b - s.a;
      const double t = std::clamp((x - s.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
      return (s.a + t * ab - x).norm() <= tol;
    }
    case BodyKind::Product: {
      const auto& f = std::get<ProductShape>(body.shape).factors;
      const int d1 = f[0].ambient_dim;
      return contains(f[0], x.head(d1), tol) && contains(f[1], x.tail(body.ambient_dim - d1), tol);
    }
    case BodyKind::Union: {
      for (const auto& p : std::get<UnionShape>(body.shape).parts)
        if (contains(p, x, tol)) return true;
      return false;
    }
    case BodyKind::Semialgebraic: {
      for (int i = 0; i < body.ambient_dim; ++i)
        if (x[i] < body.box_lo[i] - tol || x[i] > body.box_hi[i] + tol) return false;
      for (const auto& p : std::get<SemialgebraicShape>(body.shape).inequalities)
        if (p.eval(x) > tol) return false;
      return true;
    }
  }
  return false;
}

namespace detail {

inline Face face_from_vertex_set(const Body& body, const std::vector<int>& vids) {
  const auto& poly = body.polytope();
  Face f;
  f.vertex_ids = vids;
  std::vector<int> act = poly.vertex_tight[static_cast<std::size_t>(vids.front())];
  for (int v : vids) {
    std::vector<int> tmp;
    const auto& t = poly.vertex_tight[static_cast<std::size_t>(v)];
    std::set_intersection(act.begin(), act.end(), t.begin(), t.end(), std::back_inserter(tmp));
    act = std::move(tmp);
  }
  f.active = act;
  std::vector<Vec> pts;
  for (int v : vids) pts.push_back(poly.vertices[static_cast<std::size_t>(v)]);
  if (pts.size() == 1) {
    f.hull = AffineHull{pts.front(), Mat(body.ambient_dim, 0)};
  } else {
    f.hull = affine_hull_of(pts);
  }
  f.dim = f.hull.dim();
  if (f.dim == body.ambient_dim) f.hull = full_hull(body.ambient_dim);
  return f;
}

/// Vertex ids whose tight sets contain `active`.
inline std::vector<int> vertices_with(const PolytopeShape& poly, const std::vector<int>& active) {
  std::vector<int> out;
  for (std::size_t v = 0; v < poly.vertices.size(); ++v)
    if (includes(poly.vertex_tight[v], active)) out.push_back(static_cast<int>(v));
  return out;
}

}  // namespace detail

/// The unique face whose relative interior contains x. Active constraints are
/// those with |n.x - b| <= tol (1 + |b|); the dimension is ambient_dim minus
/// the rank of the active normals.
inline Face face_of(const Body& body, const Vec& x, double tol = 1e-9) {
  const auto& poly = body.polytope();
  if (!contains(body, x, std::max(tol, 1e-12) * 10.0)) throw GeometryError("face_of: point outside body");
  const std::vector<int> act = detail::tight_set(poly.halfspaces, x, tol);
  int rank = 0;
  if (!act.empty()) {
    Mat n(static_cast<Eigen::Index>(act.size()), body.ambient_dim);
    for (std::size_t i = 0; i < act.size(); ++i) n.row(static_cast<Eigen::Index>(i)) = poly.halfspaces[static_cast<std::size_t>(act[i])].normal.transpose();
    rank = numerical_rank(n, 1e-10);
  }
  const std::vector<int> vids = detail::vertices_with(poly, act);
  if (vids.empty()) throw GeometryError("face_of: active set matches no vertex");
  Face f = detail::face_from_vertex_set(body, vids);
  if (f.dim != body.ambient_dim - rank)
    throw GeometryError("face_of: inconsistent face dimension (degenerate tolerance)");
  return f;
}

/// All faces of dimension <= k, ordered by (dim, vertex ids). Every face is
/// the intersection of the facets containing it, so the lattice is generated
/// by closing the full vertex set under intersection with each constraint's
/// tight vertex set.
inline Skeleton skeleton(const Body& body, int k) {
  const auto& poly = body.polytope();
  if (k < 0 || k > body.ambient_dim) throw GeometryError("skeleton: k out of range");
  const int nv = static_cast<int>(poly.vertices.size());
  std::vector<std::vector<int>> tight_by_constraint(poly.halfspaces.size());
  for (int v = 0; v < nv; ++v)
    for (int i : poly.vertex_tight[static_cast<std::size_t>(v)]) tight_by_constraint[static_cast<std::size_t>(i)].push_back(v);
  std::set<std::vector<int>> family;
  std::vector<std::vector<int>> queue;
  std::vector<int> all(static_cast<std::size_t>(nv));
  std::iota(all.begin(), all.end(), 0);
  family.insert(all);
  queue.push_back(all);
  while (!queue.empty()) {
    const auto s = queue.back();
    queue.pop_back();
    for (const auto& t : tight_by_constraint) {
      std::vector<int> inter;
      std::set_intersection(s.begin(), s.end(), t.begin(), t.end(), std::back_inserter(inter));
      if (inter.empty()) continue;
      if (family.insert(inter).second) queue.push_back(inter);
    }
  }
  Skeleton sk;
  sk.k = k;
  for (const auto& s : family) {
    Face f = detail::face_from_vertex_set(body, s);
    if (f.dim <= k) sk.faces.push_back(std::move(f));
  }
  std::sort(sk.faces.begin(), sk.faces.end(), [](const Face& a, const Face& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.vertex_ids < b.vertex_ids;
  });
  return sk;
}

struct EnclosingBall {
  Vec center;
  double radius = 0.0;
};

/// A ball containing the body: exact for balls, bounding-box circumball
/// otherwise (not minimal in general).
inline EnclosingBall enclosing_ball(const Body& body) {
  if (body.kind() == BodyKind::Ball) {
    const auto& s = std::get<BallShape>(body.shape);
    return {s.center, s.radius};
  }
  if (body.is_polytope()) {
    const Vec c = 0.5 * (body.box_lo + body.box_hi);
    double r = 0.0;
    for (const auto& v : body.polytope().vertices) r = std::max(r, (v - c).norm());
    return {c, r};
  }
  const Vec c = 0.5 * (body.box_lo + body.box_hi);
  return {c, 0.5 * (body.box_hi - body.box_lo).norm()};
}

struct ClipResult {
  Vec point;
  bool reached = true;          // segment stayed inside; point == y
  double fraction = 1.0;        // point = x + fraction (y - x)
  std::optional<Face> face;     // polytopes only, when !reached
};

/// First boundary crossing of the segment [x, y].
inline ClipResult boundary_clip(const Body& body, const Vec& x, const Vec& y, double tol = 1e-9) {
  if (!contains(body, x, tol)) throw GeometryError("boundary_clip: start point outside body");
  const Vec d = y - x;
  ClipResult out;
  switch (body.kind()) {
    case BodyKind::Polytope: {
      double t = 1.0;
      for (const auto& h : body.polytope().halfspaces) {
        const double rate = h.normal.dot(d);
        if (rate > 0.0) t = std::min(t, std::max(0.0, h.slack(x)) / rate);
      }
      if (t >= 1.0 && contains(body, y, tol)) {
        out.point = y;
        return out;
      }
      out.reached = false;
      out.fraction = t;
      out.point = x + t * d;
      out.face = face_of(body, out.point, std::max(tol, 1e-9));
      return out;
    }
    case BodyKind::Ball: {
      if (contains(body, y, tol)) {
        out.point = y;
        return out;
      }
      const auto& s = std::get<BallShape>(body.shape);
      out.reached = false;
      if (body.hull.distance(y) > tol) {
        out.fraction = 0.0;
        out.point = x;
        return out;
      }
      const Vec r = x - s.center;
      const double a = d.squaredNorm(), bq = r.dot(d), c = r.squaredNorm() - sq(s.radius);
      const double disc = std::max(0.0, bq * bq - a * c);
      const double t = std::clamp((-bq + std::sqrt(disc)) / a, 0.0, 1.0);
      out.fraction = t;
      out.point = x + t * d;
      return out;
    }
    default: {
      constexpr int kSamples = 64;
      double t_in = 0.0;
      for (int i = 1; i <= kSamples; ++i) {
        const double t = static_cast<double>(i) / kSamples;
        if (!contains(body, x + t * d, tol)) {
          double lo = t_in, hi = t;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (contains(body, x + mid * d, tol)) lo = mid; else hi = mid;
          }
          out.reached = false;
          out.fraction = lo;
          out.point = x + lo * d;
          return out;
        }
        t_in = t;
      }
      out.point = y;
      return out;
    }
  }
}

}  // namespace mcflow
