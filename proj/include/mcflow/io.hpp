#pragma once

// File formats: body descriptions (JSON), value fields (CSV with an inline
// `# key=value` header carrying the grid), and solve reports (JSON).
//
// Body schema, one object per body:
//   {"kind": "polytope", "dim": d, "halfspaces": [[n_1, ..., n_d, b], ...]}
//   {"kind": "polytope", "dim": d, "vertices": [[x_1, ..., x_d], ...]}
//   {"kind": "ball", "dim": d, "center": [...], "radius": r, "basis": [[...], ...]}   (basis optional)
//   {"kind": "segment", "dim": d, "a": [...], "b": [...]}
//   {"kind": "product", "dim": d, "factors": [body, body]}
//   {"kind": "union", "dim": d, "parts": [body, ...]}
//   {"kind": "semialgebraic", "dim": d, "lo": [...], "hi": [...],
//    "inequalities": [[{"coef": c, "exponents": [e_1, ..., e_d]}, ...], ...]}
// Every object may carry a "name" string. Unknown keys are rejected.

#include "mcflow/field.hpp"
#include "mcflow/geometry.hpp"
#include "mcflow/solver.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcflow {

using json = nlohmann::json;

/// Malformed input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Bodies

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw FormatError(where + ": unknown key '" + key + "'");
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw FormatError(where + ": expected a number");
  return j.get<double>();
}

inline Vec vector_of(const json& j, int d, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array");
  if (d >= 0 && static_cast<int>(j.size()) != d)
    throw FormatError(where + ": expected " + std::to_string(d) + " entries, got " + std::to_string(j.size()));
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where);
  return v;
}

inline json vector_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace detail

inline Body body_from_json(const json& j, const std::string& where = "body") {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  const std::string kind = detail::require(j, "kind", where).get<std::string>();
  const json& dj = detail::require(j, "dim", where);
  if (!dj.is_number_integer() || dj.get<int>() < 1) throw FormatError(where + ": 'dim' must be a positive integer");
  const int d = dj.get<int>();
  try {
    if (kind == "polytope") {
      detail::check_keys(j, {"kind", "dim", "name", "halfspaces", "vertices"}, where);
      if (j.contains("halfspaces") == j.contains("vertices"))
        throw FormatError(where + ": polytope needs exactly one of 'halfspaces' or 'vertices'");
      if (j.contains("halfspaces")) {
        std::vector<HalfSpace> hs;
        for (const auto& row : j.at("halfspaces")) {
          const Vec r = detail::vector_of(row, d + 1, where + ".halfspaces");
          hs.push_back(HalfSpace{r.head(d), r[d]});
        }
        return make_polytope(hs, d);
      }
      std::vector<Vec> pts;
      for (const auto& row : j.at("vertices")) pts.push_back(detail::vector_of(row, d, where + ".vertices"));
      return make_polytope_from_vertices(pts);
    }
    if (kind == "ball") {
      detail::check_keys(j, {"kind", "dim", "name", "center", "radius", "basis"}, where);
      const Vec c = detail::vector_of(detail::require(j, "center", where), d, where + ".center");
      const double r = detail::number(detail::require(j, "radius", where), where + ".radius");
      Mat basis;
      if (j.contains("basis")) {
        const auto& bj = j.at("basis");
        if (!bj.is_array() || bj.empty()) throw FormatError(where + ".basis: expected a non-empty array of vectors");
        basis.resize(d, static_cast<Eigen::Index>(bj.size()));
        for (std::size_t i = 0; i < bj.size(); ++i)
          basis.col(static_cast<Eigen::Index>(i)) = detail::vector_of(bj[i], d, where + ".basis");
      }
      return make_ball(c, r, basis);
    }
    if (kind == "segment") {
      detail::check_keys(j, {"kind", "dim", "name", "a", "b"}, where);
      return make_segment(detail::vector_of(detail::require(j, "a", where), d, where + ".a"),
                          detail::vector_of(detail::require(j, "b", where), d, where + ".b"));
    }
    if (kind == "product") {
      detail::check_keys(j, {"kind", "dim", "name", "factors"}, where);
      const auto& fj = detail::require(j, "factors", where);
      if (!fj.is_array() || fj.size() != 2) throw FormatError(where + ".factors: expected two bodies");
      const Body b = make_product(body_from_json(fj[0], where + ".factors[0]"), body_from_json(fj[1], where + ".factors[1]"));
      if (b.ambient_dim != d) throw FormatError(where + ": factor dimensions do not add up to 'dim'");
      return b;
    }
    if (kind == "union") {
      detail::check_keys(j, {"kind", "dim", "name", "parts"}, where);
      const auto& pj = detail::require(j, "parts", where);
      if (!pj.is_array() || pj.empty()) throw FormatError(where + ".parts: expected a non-empty array");
      std::vector<Body> parts;
      for (std::size_t i = 0; i < pj.size(); ++i) {
        parts.push_back(body_from_json(pj[i], where + ".parts[" + std::to_string(i) + "]"));
        if (parts.back().ambient_dim != d) throw FormatError(where + ": part dimension differs from 'dim'");
      }
      return make_union(parts);
    }
    if (kind == "semialgebraic") {
      detail::check_keys(j, {"kind", "dim", "name", "lo", "hi", "inequalities"}, where);
      const Vec lo = detail::vector_of(detail::require(j, "lo", where), d, where + ".lo");
      const Vec hi = detail::vector_of(detail::require(j, "hi", where), d, where + ".hi");
      std::vector<Polynomial> ineqs;
      for (const auto& pj : detail::require(j, "inequalities", where)) {
        Polynomial p;
        for (const auto& mj : pj) {
          detail::check_keys(mj, {"coef", "exponents"}, where + ".inequalities");
          Monomial m;
          m.coef = detail::number(detail::require(mj, "coef", where), where + ".coef");
          const auto& ej = detail::require(mj, "exponents", where);
          if (!ej.is_array() || static_cast<int>(ej.size()) != d) throw FormatError(where + ": exponents must have 'dim' entries");
          for (const auto& e : ej) {
            if (!e.is_number_integer() || e.get<int>() < 0) throw FormatError(where + ": exponents must be non-negative integers");
            m.exponents.push_back(e.get<int>());
          }
          p.terms.push_back(std::move(m));
        }
        ineqs.push_back(std::move(p));
      }
      return make_semialgebraic(ineqs, lo, hi);
    }
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  } catch (const GeometryError& e) {
    throw FormatError(where + ": " + e.what());
  }
  throw FormatError(where + ": unknown kind '" + kind + "'");
}

inline json body_to_json(const Body& b) {
  json j;
  j["kind"] = kind_name(b.kind());
  j["dim"] = b.ambient_dim;
  switch (b.kind()) {
    case BodyKind::Polytope: {
      json rows = json::array();
      for (const auto& h : b.polytope().halfspaces) {
        json r = detail::vector_json(h.normal);
        r.push_back(h.offset);
        rows.push_back(r);
      }
      j["halfspaces"] = rows;
      break;
    }
    case BodyKind::Ball: {
      const auto& s = std::get<BallShape>(b.shape);
      j["center"] = detail::vector_json(s.center);
      j["radius"] = s.radius;
      if (b.hull.dim() < b.ambient_dim) {
        json basis = json::array();
        for (int c = 0; c < b.hull.dim(); ++c) basis.push_back(detail::vector_json(b.hull.basis.col(c)));
        j["basis"] = basis;
      }
      break;
    }
    case BodyKind::Segment: {
      const auto& s = std::get<SegmentShape>(b.shape);
      j["a"] = detail::vector_json(s.a);
      j["b"] = detail::vector_json(s.b);
      break;
    }
    case BodyKind::Product: {
      json f = json::array();
      for (const auto& part : std::get<ProductShape>(b.shape).factors) f.push_back(body_to_json(part));
      j["factors"] = f;
      break;
    }
    case BodyKind::Union: {
      json p = json::array();
      for (const auto& part : std::get<UnionShape>(b.shape).parts) p.push_back(body_to_json(part));
      j["parts"] = p;
      break;
    }
    case BodyKind::Semialgebraic: {
      j["lo"] = detail::vector_json(b.box_lo);
      j["hi"] = detail::vector_json(b.box_hi);
      json ineqs = json::array();
      for (const auto& p : std::get<SemialgebraicShape>(b.shape).inequalities) {
        json terms = json::array();
        for (const auto& m : p.terms) terms.push_back({{"coef", m.coef}, {"exponents", m.exponents}});
        ineqs.push_back(terms);
      }
      j["inequalities"] = ineqs;
      break;
    }
  }
  return j;
}

inline Body load_body(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open body file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return body_from_json(j, path);
}

// ---------------------------------------------------------------------------
// Fields

namespace detail {

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Interior: return "interior";
    case NodeKind::Boundary: return "boundary";
    case NodeKind::Outside: return "outside";
  }
  return "?";
}

inline NodeKind node_kind_from(const std::string& s) {
  if (s == "interior") return NodeKind::Interior;
  if (s == "boundary") return NodeKind::Boundary;
  if (s == "outside") return NodeKind::Outside;
  throw FormatError("field: unknown node kind '" + s + "'");
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

template <typename T>
std::vector<T> split(const std::string& s) {
  std::istringstream is(s);
  std::vector<T> out;
  T x;
  while (is >> x) out.push_back(x);
  if (!is.eof()) throw FormatError("field: malformed header list '" + s + "'");
  return out;
}

}  // namespace detail

/// CSV: `# key=value` header lines with the grid (h, origin, shape, hull
/// base and basis) and the face, then one row per node:
/// i_1..i_k, x_1..x_d, value, kind.
inline void write_field_csv(std::ostream& os, const ValueField& f) {
  const Grid& g = f.grid;
  const int k = g.dim(), d = g.hull.ambient_dim();
  os.precision(17);
  os << "# format=mcflow-field\n# version=1\n";
  os << "# dim=" << k << "\n# ambient=" << d << "\n# h=" << g.h << "\n";
  os << "# origin=" << detail::join(g.origin) << "\n# shape=" << detail::join(g.shape) << "\n";
  std::vector<double> base(g.hull.base.data(), g.hull.base.data() + d);
  std::vector<double> basis(g.hull.basis.data(), g.hull.basis.data() + static_cast<std::ptrdiff_t>(d) * k);
  os << "# base=" << detail::join(base) << "\n# basis=" << detail::join(basis) << "\n";
  if (f.face) {
    os << "# face_dim=" << f.face->dim << "\n# face_vertices=" << detail::join(f.face->vertex_ids) << "\n";
    os << "# face_active=" << detail::join(f.face->active) << "\n";
  }
  for (int a = 0; a < k; ++a) os << "i" << a + 1 << ",";
  for (int a = 0; a < d; ++a) os << "x" << a + 1 << ",";
  os << "value,kind\n";
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const auto idx = g.multi(lin);
    const Vec x = g.point(lin);
    for (int v : idx) os << v << ",";
    for (int a = 0; a < d; ++a) os << x[a] << ",";
    os << f.values[lin] << "," << detail::node_kind_name(g.mask[lin]) << "\n";
  }
}

inline ValueField read_field_csv(std::istream& is) {
  std::map<std::string, std::string> hdr;
  std::string line;
  std::streampos data_start = is.tellg();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(1, eq - 1);
    key.erase(0, key.find_first_not_of(' '));
    hdr[key] = line.substr(eq + 1);
    data_start = is.tellg();
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = hdr.find(key);
    if (it == hdr.end()) throw FormatError("field: missing header '" + key + "'");
    return it->second;
  };
  if (get("format") != "mcflow-field") throw FormatError("field: not a field file");
  if (get("version") != "1") throw FormatError("field: unsupported version " + get("version"));
  ValueField f;
  Grid& g = f.grid;
  int k = 0, d = 0;
  try {
    k = std::stoi(get("dim"));
    d = std::stoi(get("ambient"));
    g.h = std::stod(get("h"));
  } catch (const std::logic_error&) {
    throw FormatError("field: malformed dim/ambient/h header");
  }
  if (k < 1 || d < k || !(g.h > 0.0)) throw FormatError("field: inconsistent dim/ambient/h header");
  g.origin = detail::split<long>(get("origin"));
  g.shape = detail::split<int>(get("shape"));
  const auto base = detail::split<double>(get("base"));
  const auto basis = detail::split<double>(get("basis"));
  if (static_cast<int>(g.origin.size()) != k || static_cast<int>(g.shape.size()) != k ||
      static_cast<int>(base.size()) != d || static_cast<int>(basis.size()) != d * k)
    throw FormatError("field: header sizes do not match dim/ambient");
  for (int s : g.shape)
    if (s < 2) throw FormatError("field: shape entries must be >= 2");
  g.hull.base = Eigen::Map<const Vec>(base.data(), d);
  g.hull.basis = Eigen::Map<const Mat>(basis.data(), d, k);
  g.lo.resize(k);
  for (int a = 0; a < k; ++a) g.lo[a] = g.h * static_cast<double>(g.origin[static_cast<std::size_t>(a)]);
  if (hdr.count("face_dim")) {
    Face face;
    face.dim = std::stoi(hdr.at("face_dim"));
    face.vertex_ids = detail::split<int>(hdr.at("face_vertices"));
    face.active = hdr.count("face_active") ? detail::split<int>(hdr.at("face_active")) : std::vector<int>{};
    face.hull = g.hull;
    f.face = face;
  }
  const std::size_t n = g.size();
  f.values.assign(n, 0.0);
  g.mask.assign(n, NodeKind::Outside);
  std::vector<bool> seen(n, false);
  is.clear();
  is.seekg(data_start);
  std::getline(is, line);  // column header
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != k + d + 2) throw FormatError("field: row has wrong column count");
    std::vector<int> idx(static_cast<std::size_t>(k));
    try {
      for (int a = 0; a < k; ++a) idx[static_cast<std::size_t>(a)] = std::stoi(cells[static_cast<std::size_t>(a)]);
    } catch (const std::logic_error&) {
      throw FormatError("field: malformed index");
    }
    for (int a = 0; a < k; ++a)
      if (idx[static_cast<std::size_t>(a)] < 0 || idx[static_cast<std::size_t>(a)] >= g.shape[static_cast<std::size_t>(a)])
        throw FormatError("field: index out of range");
    const std::size_t lin = g.linear(idx);
    try {
      f.values[lin] = std::stod(cells[static_cast<std::size_t>(k + d)]);
    } catch (const std::logic_error&) {
      throw FormatError("field: malformed value");
    }
    g.mask[lin] = detail::node_kind_from(cells.back());
    seen[lin] = true;
    ++rows;
  }
  if (rows != n || std::find(seen.begin(), seen.end(), false) != seen.end())
    throw FormatError("field: expected one row per lattice node");
  return f;
}

inline void save_field(const std::string& path, const ValueField& f) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_field_csv(out, f);
}

inline ValueField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open field file '" + path + "'");
  return read_field_csv(in);
}

// ---------------------------------------------------------------------------
// Reports

inline json config_to_json(const SchemeConfig& c) {
  return {{"h", c.h},
          {"eps", c.resolved_eps()},
          {"n_dirs", c.n_dirs},
          {"refine_dirs", c.refine_dirs},
          {"shorten_exit_steps", c.shorten_exit_steps},
          {"fp_tol", c.resolved_fp_tol()},
          {"max_sweeps", c.max_sweeps},
          {"grad_threshold", c.grad_threshold}};
}

inline json report_to_json(const SolveReport& r) {
  return {{"sweeps", r.sweeps},
          {"final_update", r.final_update},
          {"converged", r.converged},
          {"residual_median", r.residual_median},
          {"residual_p90", r.residual_p90},
          {"residual_count", r.residual_count},
          {"wall_seconds", r.wall_seconds},
          {"interior_nodes", r.interior_nodes},
          {"h", r.h},
          {"eps", r.eps},
          {"fp_tol", r.fp_tol},
          {"n_dirs", r.n_dirs},
          {"max_sweeps", r.max_sweeps},
          {"bound_radius", r.bound_radius}};
}

inline SolveReport report_from_json(const json& j) {
  SolveReport r;
  try {
    r.sweeps = j.at("sweeps").get<int>();
    r.final_update = j.at("final_update").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.residual_median = j.at("residual_median").get<double>();
    r.residual_p90 = j.at("residual_p90").get<double>();
    r.residual_count = j.at("residual_count").get<std::size_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.interior_nodes = j.at("interior_nodes").get<std::size_t>();
    r.h = j.at("h").get<double>();
    r.eps = j.at("eps").get<double>();
    r.fp_tol = j.at("fp_tol").get<double>();
    r.n_dirs = j.at("n_dirs").get<int>();
    r.max_sweeps = j.at("max_sweeps").get<int>();
    r.bound_radius = j.at("bound_radius").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  return r;
}

}  // namespace mcflow
