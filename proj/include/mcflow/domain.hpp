#pragma once

// The region a single solve lives on, in the local coordinates of its affine
// hull: either a polytope face (the whole polytope included) with boundary
// data from already-solved lower faces, or a faceless body with zero boundary
// data.

#include "mcflow/field.hpp"
#include "mcflow/geometry.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mcflow {

/// Solved fields of polytope faces of dimension >= 2, keyed by the face's
/// sorted vertex ids. Faces of dimension <= 1 carry the zero field and are
/// not stored.
using FaceFieldMap = std::map<std::vector<int>, ValueField>;

class Domain {
 public:
  /// Whole body (face == nullptr) or one face of a polytope body.
  Domain(const Body& body, const Face* face = nullptr, const FaceFieldMap* lower = nullptr)
      : body_(&body), lower_(lower) {
    if (face) {
      if (!body.is_polytope()) throw GeometryError("faces exist only for polytopes");
      face_ = *face;
    } else if (body.is_polytope()) {
      std::vector<int> all(body.polytope().vertices.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
      face_ = detail::face_from_vertex_set(body, all);
    }
    hull_ = face_ ? face_->hull : body.hull;
    if (face_) setup_polytope();
    setup_extent();
  }

  int dim() const { return hull_.dim(); }
  const AffineHull& hull() const { return hull_; }
  const std::optional<Face>& face() const { return face_; }
  bool is_polytope() const { return face_.has_value(); }
  bool is_convex() const { return is_polytope() || body_->is_convex(); }
  const Body& body() const { return *body_; }
  const Vec& extent_lo() const { return ext_lo_; }
  const Vec& extent_hi() const { return ext_hi_; }

  /// Lattice node classification. Nodes within `tol` of the boundary are
  /// Boundary nodes, except junctions of a union: a point shared by two
  /// full-dimensional parts (two discs touching at a point) is crossed by
  /// segments inside the union, so it is not absorbing and stays an unknown.
  /// Direction pairs that leave the body at once still contribute zero there.
  NodeKind classify(const Vec& xi, double tol = 1e-9) const {
    if (is_polytope()) {
      double s = std::numeric_limits<double>::infinity();
      for (const auto& c : cons_) s = std::min(s, c.b - c.a.dot(xi));
      if (s > tol) return NodeKind::Interior;
      if (s >= -tol) return NodeKind::Boundary;
      return NodeKind::Outside;
    }
    const Vec x = hull_.to_global(xi);
    if (contains(*body_, x, -tol)) return NodeKind::Interior;
    if (contains(*body_, x, tol)) return is_junction(x, tol) ? NodeKind::Interior : NodeKind::Boundary;
    return NodeKind::Outside;
  }

  bool is_junction(const Vec& x, double tol) const {
    if (body_->kind() != BodyKind::Union) return false;
    int shared = 0;
    for (const auto& part : std::get<UnionShape>(body_->shape).parts)
      if (part.hull.dim() == hull_.dim() && contains(part, x, tol)) ++shared;
    return shared >= 2;
  }

  /// Boundary data at a point on the boundary or outside the region. Outside
  /// points are first mapped to the boundary along the ray from the vertex
  /// centroid.
  double boundary_value(const Vec& xi) const {
    if (!is_polytope()) return 0.0;
    Vec z = xi;
    double s = std::numeric_limits<double>::infinity();
    for (const auto& c : cons_) s = std::min(s, c.b - c.a.dot(xi));
    if (s < -1e-9) {
      const auto t = first_crossing(centroid_, xi);
      if (t) z = centroid_ + *t * (xi - centroid_);
    }
    return value_on_boundary(z);
  }

  /// If the segment [xi, eta] leaves the region, the boundary data at the
  /// first crossing; nullopt if it stays inside. xi must be inside.
  template <typename V>
  std::optional<double> exit_value(const V& xi, const V& eta) const {
    if (is_polytope()) {
      const auto t = first_crossing(xi, eta);
      if (!t) return std::nullopt;
      const Vec z = xi + *t * (eta - xi);
      return value_on_boundary(z);
    }
    if (ball_) {
      if ((eta - ball_center_).squaredNorm() <= ball_r2_) return std::nullopt;
      return 0.0;
    }
    // Faceless, possibly non-convex: sample the segment at a quarter of the
    // lattice spacing (set by the solver) plus the endpoint.
    const double len = (eta - xi).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / sample_step_)));
    Vec x(hull_.ambient_dim());
    for (int i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      x = hull_.to_global(Vec(xi + t * (eta - xi)));
      if (!contains(*body_, x, 0.0)) return 0.0;
    }
    return std::nullopt;
  }

  /// First crossing of [xi, eta] as (fraction t in [0, 1], boundary data at
  /// the crossing); nullopt if the segment stays inside.
  template <typename V>
  std::optional<std::pair<double, double>> exit_crossing(const V& xi, const V& eta) const {
    if (is_polytope()) {
      const auto t = first_crossing(xi, eta);
      if (!t) return std::nullopt;
      const Vec z = xi + *t * (eta - xi);
      return std::make_pair(*t, value_on_boundary(z));
    }
    if (ball_) {
      if ((eta - ball_center_).squaredNorm() <= ball_r2_) return std::nullopt;
      const V d = eta - xi;
      const V r = xi - ball_center_;
      const double a = d.squaredNorm(), b = r.dot(d), c = r.squaredNorm() - ball_r2_;
      const double t = std::clamp((-b + std::sqrt(std::max(0.0, b * b - a * c))) / a, 0.0, 1.0);
      return std::make_pair(t, 0.0);
    }
    const double len = (eta - xi).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / sample_step_)));
    auto inside = [&](double t) { return contains(*body_, hull_.to_global(Vec(xi + t * (eta - xi))), 0.0); };
    for (int i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      if (!inside(t)) {
        double lo = static_cast<double>(i - 1) / n, hi = t;
        for (int it = 0; it < 30; ++it) {
          const double mid = 0.5 * (lo + hi);
          (inside(mid) ? lo : hi) = mid;
        }
        return std::make_pair(lo, 0.0);
      }
    }
    return std::nullopt;
  }

  void set_sample_step(double s) { sample_step_ = s; }

 private:
  struct LocalConstraint {
    Vec a;  // unit normal in local coordinates
    double b;
    const ValueField* field = nullptr;  // facet field, or null for zero data
  };

  void setup_polytope() {
    const auto& poly = body_->polytope();
    const auto& active = face_->active;
    for (std::size_t i = 0; i < poly.halfspaces.size(); ++i) {
      if (std::binary_search(active.begin(), active.end(), static_cast<int>(i))) continue;
      const auto& h = poly.halfspaces[i];
      Vec a = hull_.basis.transpose() * h.normal;
      const double na = a.norm();
      if (na < 1e-12) continue;  // constant on the hull, never tight here
      const double b = (h.offset - h.normal.dot(hull_.base)) / na;
      a /= na;
      bool dup = false;
      for (const auto& c : cons_)
        if ((c.a - a).norm() < 1e-12 && std::abs(c.b - b) < 1e-12 * (1.0 + std::abs(b))) dup = true;
      if (dup) continue;
      LocalConstraint lc{a, b, nullptr};
      // Sub-face of the face on which this constraint is tight.
      std::vector<int> sub;
      for (int v : face_->vertex_ids) {
        const auto& t = poly.vertex_tight[static_cast<std::size_t>(v)];
        if (std::binary_search(t.begin(), t.end(), static_cast<int>(i))) sub.push_back(v);
      }
      if (sub.empty()) continue;  // redundant, never reached
      const Face g = detail::face_from_vertex_set(*body_, sub);
      if (g.dim >= 2) {
        if (!lower_) throw GeometryError("missing face field: lower faces must be solved first");
        const auto it = lower_->find(g.vertex_ids);
        if (it == lower_->end()) throw GeometryError("missing face field for a face of dimension >= 2");
        lc.field = &it->second;
      }
      cons_.push_back(std::move(lc));
    }
    centroid_ = Vec::Zero(hull_.dim());
    for (int v : face_->vertex_ids) centroid_ += hull_.to_local(poly.vertices[static_cast<std::size_t>(v)]);
    centroid_ /= static_cast<double>(face_->vertex_ids.size());
  }

  void setup_extent() {
    const int k = hull_.dim();
    ext_lo_ = Vec::Constant(k, std::numeric_limits<double>::infinity());
    ext_hi_ = -ext_lo_;
    auto add = [&](const Vec& x) {
      const Vec xi = hull_.to_local(x);
      ext_lo_ = ext_lo_.cwiseMin(xi);
      ext_hi_ = ext_hi_.cwiseMax(xi);
    };
    if (is_polytope()) {
      for (int v : face_->vertex_ids) add(body_->polytope().vertices[static_cast<std::size_t>(v)]);
      return;
    }
    if (body_->kind() == BodyKind::Ball) {
      const auto& s = std::get<BallShape>(body_->shape);
      ball_center_ = hull_.to_local(s.center);
      ball_r2_ = sq(s.radius);
      ball_ = true;
      ext_lo_ = ball_center_.array() - s.radius;
      ext_hi_ = ball_center_.array() + s.radius;
      return;
    }
    const int d = body_->ambient_dim;
    for (int corner = 0; corner < (1 << d); ++corner) {
      Vec x(d);
      for (int i = 0; i < d; ++i) x[i] = (corner >> i) & 1 ? body_->box_hi[i] : body_->box_lo[i];
      add(x);
    }
  }

  /// Smallest t in [0, 1) at which x + t (y - x) leaves the polytope region.
  template <typename V>
  std::optional<double> first_crossing(const V& x, const V& y) const {
    double t = 1.0;
    bool hit = false;
    for (const auto& c : cons_) {
      const double rate = c.a.dot(y - x);
      if (rate <= 0.0) continue;
      const double slack = std::max(0.0, c.b - c.a.dot(x));
      if (slack < rate * t) {
        t = slack / rate;
        hit = true;
      }
    }
    if (!hit) return std::nullopt;
    return t;
  }

  /// Boundary data at a point z on the relative boundary.
  double value_on_boundary(const Vec& z) const {
    const LocalConstraint* tight = nullptr;
    int count = 0;
    for (const auto& c : cons_) {
      if (std::abs(c.b - c.a.dot(z)) <= 1e-9 * (1.0 + std::abs(c.b))) {
        tight = &c;
        ++count;
      }
    }
    if (count == 0) {
      // Not on the boundary within tolerance: use the nearest constraint.
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : cons_) {
        const double s = std::abs(c.b - c.a.dot(z));
        if (s < best) {
          best = s;
          tight = &c;
        }
      }
      count = tight ? 1 : 0;
    }
    // Two or more tight constraints: a face of dimension <= dim - 2, which is
    // at most an edge for the supported solve dimensions (2 and 3).
    if (count != 1 || !tight->field) return 0.0;
    return std::max(0.0, tight->field->interpolate(hull_.to_global(z)));
  }

  const Body* body_;
  const FaceFieldMap* lower_;
  std::optional<Face> face_;
  AffineHull hull_;
  std::vector<LocalConstraint> cons_;
  Vec centroid_;
  Vec ext_lo_, ext_hi_;
  bool ball_ = false;
  Vec ball_center_;
  double ball_r2_ = 0.0;
  double sample_step_ = 1e-3;
};

}  // namespace mcflow
