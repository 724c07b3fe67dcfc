#pragma once

// Level sets {u = t} of a value field: marching squares on 2-d lattices
// (assembled into polylines) and marching tetrahedra on 3-d lattices (a
// triangle mesh; every cube is split into the six Kuhn tetrahedra, which
// avoids the ambiguous cases of marching cubes).

#include "mcflow/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mcflow {

struct Polyline {
  std::vector<Vec> points;  ///< global coordinates
  bool closed = false;
};

struct TriMesh {
  std::vector<Vec> vertices;  ///< global coordinates
  std::vector<std::array<int, 3>> triangles;
};

struct LevelSet {
  int dim = 0;  ///< 2: polylines, 3: mesh
  double t = 0.0;
  std::vector<Polyline> polylines;
  TriMesh mesh;
};

namespace detail {

/// Crossing points keyed by lattice edge, shared between neighbouring cells.
class CrossingTable {
 public:
  CrossingTable(const ValueField& f, double t, std::vector<Vec>& out) : f_(f), t_(t), out_(out) {}

  int get(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    const auto key = std::make_pair(a, b);
    if (const auto it = ids_.find(key); it != ids_.end()) return it->second;
    const double ua = f_.values[a], ub = f_.values[b];
    const double s = ua == ub ? 0.5 : std::clamp((t_ - ua) / (ub - ua), 0.0, 1.0);
    const Vec xa = f_.grid.local_point(a), xb = f_.grid.local_point(b);
    out_.push_back(f_.grid.hull.to_global(Vec(xa + s * (xb - xa))));
    const int id = static_cast<int>(out_.size()) - 1;
    ids_.emplace(key, id);
    return id;
  }

 private:
  const ValueField& f_;
  double t_;
  std::vector<Vec>& out_;
  std::map<std::pair<std::size_t, std::size_t>, int> ids_;
};

/// Joins segments (pairs of point ids) into maximal polylines.
inline std::vector<Polyline> join_segments(const std::vector<Vec>& pts, const std::vector<std::array<int, 2>>& segs) {
  std::vector<std::vector<int>> adj(pts.size());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    adj[static_cast<std::size_t>(segs[s][0])].push_back(static_cast<int>(s));
    adj[static_cast<std::size_t>(segs[s][1])].push_back(static_cast<int>(s));
  }
  std::vector<bool> used(segs.size(), false);
  std::vector<Polyline> lines;
  auto walk = [&](int start_seg, int start_pt) {
    Polyline pl;
    int pt = start_pt, seg = start_seg;
    pl.points.push_back(pts[static_cast<std::size_t>(pt)]);
    while (seg >= 0 && !used[static_cast<std::size_t>(seg)]) {
      used[static_cast<std::size_t>(seg)] = true;
      const auto& sg = segs[static_cast<std::size_t>(seg)];
      pt = sg[0] == pt ? sg[1] : sg[0];
      if (pt == start_pt) {
        pl.closed = true;
        break;
      }
      pl.points.push_back(pts[static_cast<std::size_t>(pt)]);
      int next = -1;
      for (int cand : adj[static_cast<std::size_t>(pt)])
        if (!used[static_cast<std::size_t>(cand)]) next = cand;
      seg = next;
    }
    lines.push_back(std::move(pl));
  };
  // Open chains first (start at degree-1 points), then the remaining loops.
  for (std::size_t p = 0; p < pts.size(); ++p)
    if (adj[p].size() == 1 && !used[static_cast<std::size_t>(adj[p][0])]) walk(adj[p][0], static_cast<int>(p));
  for (std::size_t s = 0; s < segs.size(); ++s)
    if (!used[s]) walk(static_cast<int>(s), segs[s][0]);
  return lines;
}

inline LevelSet marching_squares(const ValueField& f, double t) {
  const Grid& g = f.grid;
  std::vector<Vec> pts;
  CrossingTable table(f, t, pts);
  std::vector<std::array<int, 2>> segs;
  const bool skip_outside = f.face.has_value();
  const int nx = g.shape[0], ny = g.shape[1];
  auto lin = [&](int i, int j) { return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(j); };
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i) {
      // Corners counter-clockwise; edge e joins corner e and corner e+1.
      const std::array<std::size_t, 4> c{lin(i, j), lin(i + 1, j), lin(i + 1, j + 1), lin(i, j + 1)};
      if (skip_outside && std::any_of(c.begin(), c.end(), [&](std::size_t id) { return g.mask[id] == NodeKind::Outside; }))
        continue;
      std::array<bool, 4> in{};
      int n_in = 0;
      for (int k = 0; k < 4; ++k) n_in += (in[static_cast<std::size_t>(k)] = f.values[c[static_cast<std::size_t>(k)]] > t);
      if (n_in == 0 || n_in == 4) continue;
      auto edge = [&](int e) { return table.get(c[static_cast<std::size_t>(e)], c[static_cast<std::size_t>((e + 1) % 4)]); };
      std::vector<int> crossed;
      for (int e = 0; e < 4; ++e)
        if (in[static_cast<std::size_t>(e)] != in[static_cast<std::size_t>((e + 1) % 4)]) crossed.push_back(e);
      if (crossed.size() == 2) {
        segs.push_back({edge(crossed[0]), edge(crossed[1])});
        continue;
      }
      // Saddle: the cell-centre average decides which diagonal is connected.
      double centre = 0.0;
      for (auto id : c) centre += 0.25 * f.values[id];
      const bool cut_around_1_3 = (centre > t) == in[0];
      if (cut_around_1_3) {
        segs.push_back({edge(0), edge(1)});
        segs.push_back({edge(2), edge(3)});
      } else {
        segs.push_back({edge(3), edge(0)});
        segs.push_back({edge(1), edge(2)});
      }
    }
  LevelSet ls;
  ls.dim = 2;
  ls.t = t;
  ls.polylines = join_segments(pts, segs);
  return ls;
}

inline LevelSet marching_tetrahedra(const ValueField& f, double t) {
  const Grid& g = f.grid;
  LevelSet ls;
  ls.dim = 3;
  ls.t = t;
  CrossingTable table(f, t, ls.mesh.vertices);
  const bool skip_outside = f.face.has_value();
  const int nx = g.shape[0], ny = g.shape[1], nz = g.shape[2];
  // Kuhn tetrahedra: 0 -> e_a -> e_a + e_b -> 7 over the permutations (a, b, c).
  static constexpr std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        auto corner = [&](int bits) {
          return g.linear({i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1)});
        };
        for (const auto& p : perms) {
          const int b1 = 1 << p[0], b2 = b1 | (1 << p[1]);
          const std::array<std::size_t, 4> v{corner(0), corner(b1), corner(b2), corner(7)};
          if (skip_outside && std::any_of(v.begin(), v.end(), [&](std::size_t id) { return g.mask[id] == NodeKind::Outside; }))
            continue;
          std::vector<std::size_t> ins, outs;
          for (auto id : v) (f.values[id] > t ? ins : outs).push_back(id);
          if (ins.empty() || outs.empty()) continue;
          // Orient triangles with the normal pointing towards larger values.
          Vec c_in = Vec::Zero(3), c_out = Vec::Zero(3);
          for (auto id : ins) c_in += g.local_point(id) / static_cast<double>(ins.size());
          for (auto id : outs) c_out += g.local_point(id) / static_cast<double>(outs.size());
          auto emit = [&](int a, int b, int c) {
            const auto& va = ls.mesh.vertices;
            const Vec pa = g.hull.to_local(va[static_cast<std::size_t>(a)]);
            const Vec pb = g.hull.to_local(va[static_cast<std::size_t>(b)]);
            const Vec pc = g.hull.to_local(va[static_cast<std::size_t>(c)]);
            const Eigen::Vector3d n = Eigen::Vector3d(pb - pa).cross(Eigen::Vector3d(pc - pa));
            if (n.dot(Eigen::Vector3d(c_in - c_out)) < 0.0) std::swap(b, c);
            ls.mesh.triangles.push_back({a, b, c});
          };
          if (ins.size() == 1 || outs.size() == 1) {
            const bool lone_in = ins.size() == 1;
            const std::size_t apex = lone_in ? ins[0] : outs[0];
            const auto& others = lone_in ? outs : ins;
            emit(table.get(apex, others[0]), table.get(apex, others[1]), table.get(apex, others[2]));
          } else {
            const int a = table.get(ins[0], outs[0]), b = table.get(ins[0], outs[1]);
            const int c = table.get(ins[1], outs[1]), d = table.get(ins[1], outs[0]);
            emit(a, b, c);
            emit(a, c, d);
          }
        }
      }
  return ls;
}

}  // namespace detail

/// Level set {u = t} of a 2-d or 3-d field. Nodes with u > t count as
/// inside; crossings are placed by linear interpolation along lattice edges.
/// On polytope fields, cells touching Outside nodes are skipped: those nodes
/// hold extended boundary data, not values of u. As u > 0 on the facets, the
/// contour of a polytope is generally an open curve or surface ending at the
/// boundary.
/// For t at the maximum, the contour degenerates to the argmax node (a
/// single-point polyline, or a mesh with one vertex and no triangles).
inline LevelSet extract_levelset(const ValueField& field, double t) {
  const int k = field.grid.dim();
  if (k != 2 && k != 3) throw std::invalid_argument("extract_levelset: field must be 2- or 3-dimensional");
  const double top = field.max_value();
  if (!(t >= 0.0)) throw std::invalid_argument("extract_levelset: t must be >= 0");
  if (t > top + 1e-12 * (1.0 + top)) throw std::invalid_argument("extract_levelset: t above the field maximum");
  LevelSet ls = k == 2 ? detail::marching_squares(field, t) : detail::marching_tetrahedra(field, t);
  const bool empty = k == 2 ? ls.polylines.empty() : ls.mesh.triangles.empty();
  if (empty) {
    std::size_t arg = 0;
    for (std::size_t i = 0; i < field.values.size(); ++i)
      if (field.grid.mask[i] != NodeKind::Outside && field.values[i] > field.values[arg]) arg = i;
    const Vec p = field.grid.point(arg);
    if (k == 2) {
      ls.polylines.push_back(Polyline{{p}, false});
    } else {
      ls.mesh.vertices = {p};
    }
  }
  return ls;
}

/// Polylines as CSV rows `polyline,index,closed,x1..xd`.
inline void write_polylines_csv(std::ostream& os, const LevelSet& ls) {
  os.precision(17);
  os << "# level=" << ls.t << "\n";
  int d = 0;
  for (const auto& pl : ls.polylines)
    if (!pl.points.empty()) d = static_cast<int>(pl.points.front().size());
  os << "polyline,index,closed";
  for (int i = 1; i <= d; ++i) os << ",x" << i;
  os << "\n";
  for (std::size_t l = 0; l < ls.polylines.size(); ++l) {
    const auto& pl = ls.polylines[l];
    for (std::size_t i = 0; i < pl.points.size(); ++i) {
      os << l << "," << i << "," << (pl.closed ? 1 : 0);
      for (Eigen::Index c = 0; c < pl.points[i].size(); ++c) os << "," << pl.points[i][c];
      os << "\n";
    }
  }
}

/// OFF mesh. Vertices are written in `frame` coordinates: the hull's local
/// coordinates when the ambient space is not 3-dimensional.
inline void write_off(std::ostream& os, const LevelSet& ls, const AffineHull& frame) {
  os.precision(17);
  const bool local = frame.ambient_dim() != 3;
  os << "OFF\n";
  os << "# level=" << ls.t << (local ? " coordinates=local" : " coordinates=global") << "\n";
  os << ls.mesh.vertices.size() << " " << ls.mesh.triangles.size() << " 0\n";
  for (const auto& v : ls.mesh.vertices) {
    const Vec p = local ? frame.to_local(v) : v;
    os << p[0] << " " << p[1] << " " << p[2] << "\n";
  }
  for (const auto& tri : ls.mesh.triangles) os << "3 " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
}

}  // namespace mcflow
