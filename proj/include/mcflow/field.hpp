#pragma once

// Lattices over an affine hull and the value fields that live on them.

#include "mcflow/geometry.hpp"
#include "mcflow/linalg.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mcflow {

enum class NodeKind : std::uint8_t { Interior = 0, Boundary = 1, Outside = 2 };

/// Regular lattice in the local coordinates of an affine hull:
/// node(i) = hull.to_global(lo + h * i).
struct Grid {
  AffineHull hull;
  double h = 0.0;
  Vec lo;                   // local coordinates of node (0, ..., 0); lo = h * origin
  std::vector<long> origin; // lattice offset of node (0, ..., 0)
  std::vector<int> shape;   // nodes per axis
  std::vector<NodeKind> mask;

  int dim() const { return static_cast<int>(shape.size()); }
  std::size_t size() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }
  /// Linear index; axis 0 varies fastest.
  std::size_t linear(const std::vector<int>& idx) const {
    std::size_t lin = 0, stride = 1;
    for (int a = 0; a < dim(); ++a) {
      lin += stride * static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
      stride *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
    }
    return lin;
  }
  std::vector<int> multi(std::size_t lin) const {
    std::vector<int> idx(shape.size());
    for (std::size_t a = 0; a < shape.size(); ++a) {
      idx[a] = static_cast<int>(lin % static_cast<std::size_t>(shape[a]));
      lin /= static_cast<std::size_t>(shape[a]);
    }
    return idx;
  }
  Vec local_point(std::size_t lin) const {
    const auto idx = multi(lin);
    Vec xi(dim());
    // h * (integer) keeps mirror-symmetric lattices exactly symmetric.
    for (int a = 0; a < dim(); ++a)
      xi[a] = h * static_cast<double>(origin[static_cast<std::size_t>(a)] + idx[static_cast<std::size_t>(a)]);
    return xi;
  }
  Vec point(std::size_t lin) const { return hull.to_global(local_point(lin)); }
};

/// Discrete arrival-time function on a grid. `face` is set when the field
/// belongs to a face of a polytope (the whole body included).
struct ValueField {
  Grid grid;
  std::vector<double> values;
  std::optional<Face> face;

  /// Multilinear interpolation at local coordinates; points outside the
  /// lattice are clamped to it.
  double interpolate_local(const Vec& xi) const {
    const int k = grid.dim();
    if (xi.size() != k) throw std::invalid_argument("interpolate: dimension mismatch");
    std::array<int, 8> base{};
    std::array<double, 8> frac{};
    if (k > 8) throw std::invalid_argument("interpolate: dimension too large");
    for (int a = 0; a < k; ++a) {
      const int n = grid.shape[static_cast<std::size_t>(a)];
      double s = (xi[a] - grid.lo[a]) / grid.h;
      s = std::clamp(s, 0.0, static_cast<double>(n - 1));
      int i = static_cast<int>(std::floor(s));
      if (i >= n - 1) i = n - 2;
      base[static_cast<std::size_t>(a)] = i;
      frac[static_cast<std::size_t>(a)] = s - i;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << k); ++corner) {
      double w = 1.0;
      std::size_t lin = 0, stride = 1;
      for (int a = 0; a < k; ++a) {
        const bool up = (corner >> a) & 1;
        const double f = frac[static_cast<std::size_t>(a)];
        w *= up ? f : 1.0 - f;
        lin += stride * static_cast<std::size_t>(base[static_cast<std::size_t>(a)] + (up ? 1 : 0));
        stride *= static_cast<std::size_t>(grid.shape[static_cast<std::size_t>(a)]);
      }
      if (w != 0.0) acc += w * values[lin];
    }
    return acc;
  }

  double interpolate(const Vec& x) const { return interpolate_local(grid.hull.to_local(x)); }

  /// Central-difference gradient and Hessian (local coordinates) of the
  /// interpolated field at xi with spacing `step`.
  void derivatives_local(const Vec& xi, double step, Vec& grad, Mat& hess) const {
    const int k = grid.dim();
    grad.resize(k);
    hess.resize(k, k);
    const double u0 = interpolate_local(xi);
    Vec y = xi;
    for (int a = 0; a < k; ++a) {
      y[a] = xi[a] + step;
      const double up = interpolate_local(y);
      y[a] = xi[a] - step;
      const double dn = interpolate_local(y);
      y[a] = xi[a];
      grad[a] = (up - dn) / (2.0 * step);
      hess(a, a) = (up - 2.0 * u0 + dn) / (step * step);
    }
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) {
        double s = 0.0;
        for (int sa = -1; sa <= 1; sa += 2)
          for (int sb = -1; sb <= 1; sb += 2) {
            y = xi;
            y[a] += sa * step;
            y[b] += sb * step;
            s += sa * sb * interpolate_local(y);
          }
        hess(a, b) = hess(b, a) = s / (4.0 * step * step);
      }
  }

  double max_value() const {
    double m = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (grid.mask[i] != NodeKind::Outside) {
        m = any ? std::max(m, values[i]) : values[i];
        any = true;
      }
    return m;
  }
};

/// Gradient and Hessian (local coordinates) of a value field, fitted at every
/// lattice node by weighted least squares: a quadratic through the in-body
/// nodes (Interior and Boundary) within a radius of a few lattice spacings.
/// The fit smooths the grid-scale roughness that a two-point difference of
/// the multilinear interpolant picks up, and near the boundary it uses only
/// in-body data, extrapolating to nodes just outside.
struct DerivativeField {
  Grid grid;
  std::vector<double> data;  ///< per node: k gradient entries, then the k x k Hessian (column-major)
  std::vector<std::uint8_t> valid;

  /// Multilinear interpolation over the valid corners of the cell containing
  /// xi; if none is valid, the nearest valid node within two lattice
  /// spacings. False when there is none.
  bool at_local(const Vec& xi, Vec& grad, Mat& hess) const {
    const int k = grid.dim();
    const std::size_t stride_node = static_cast<std::size_t>(k + k * k);
    std::array<int, 8> base{};
    std::array<double, 8> frac{};
    for (int a = 0; a < k; ++a) {
      const int n = grid.shape[static_cast<std::size_t>(a)];
      double s = std::clamp((xi[a] - grid.lo[a]) / grid.h, 0.0, static_cast<double>(n - 1));
      int i = static_cast<int>(std::floor(s));
      if (i >= n - 1) i = n - 2;
      base[static_cast<std::size_t>(a)] = i;
      frac[static_cast<std::size_t>(a)] = s - i;
    }
    Vec acc = Vec::Zero(static_cast<Eigen::Index>(stride_node));
    double wsum = 0.0;
    for (int corner = 0; corner < (1 << k); ++corner) {
      double w = 1.0;
      std::size_t lin = 0, stride = 1;
      for (int a = 0; a < k; ++a) {
        const bool up = (corner >> a) & 1;
        const double f = frac[static_cast<std::size_t>(a)];
        w *= up ? f : 1.0 - f;
        lin += stride * static_cast<std::size_t>(base[static_cast<std::size_t>(a)] + (up ? 1 : 0));
        stride *= static_cast<std::size_t>(grid.shape[static_cast<std::size_t>(a)]);
      }
      if (w <= 0.0 || !valid[lin]) continue;
      acc += w * Eigen::Map<const Vec>(data.data() + lin * stride_node, static_cast<Eigen::Index>(stride_node));
      wsum += w;
    }
    if (wsum <= 0.0) {
      double best = std::numeric_limits<double>::infinity();
      std::vector<int> idx(static_cast<std::size_t>(k)), off(static_cast<std::size_t>(k), -2);
      while (true) {
        bool ok = true;
        double d2 = 0.0;
        for (int a = 0; a < k && ok; ++a) {
          idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + off[static_cast<std::size_t>(a)];
          ok = idx[static_cast<std::size_t>(a)] >= 0 && idx[static_cast<std::size_t>(a)] < grid.shape[static_cast<std::size_t>(a)];
          d2 += sq(off[static_cast<std::size_t>(a)] - frac[static_cast<std::size_t>(a)]);
        }
        if (ok && d2 < best && valid[grid.linear(idx)]) {
          best = d2;
          acc = Eigen::Map<const Vec>(data.data() + grid.linear(idx) * stride_node, static_cast<Eigen::Index>(stride_node));
          wsum = 1.0;
        }
        int a = 0;
        while (a < k && ++off[static_cast<std::size_t>(a)] > 3) off[static_cast<std::size_t>(a++)] = -2;
        if (a == k) break;
      }
      if (wsum <= 0.0) return false;
    }
    acc /= wsum;
    grad = acc.head(k);
    hess = Eigen::Map<const Mat>(acc.data() + k, k, k);
    return true;
  }
};

/// Fits derivatives at every node with radius `radius` (in lattice
/// spacings) and weights (1 - (r/radius)^2)^2.
inline DerivativeField fit_derivatives(const ValueField& field, double radius = 3.0) {
  const Grid& g = field.grid;
  const int k = g.dim();
  if (!(radius >= 1.5)) throw std::invalid_argument("fit_derivatives: radius must be at least 1.5 lattice spacings");
  const int reach = static_cast<int>(std::floor(radius));
  // Lattice offsets inside the ball, with weights and quadratic design rows.
  const int n_coef = 1 + k + k * (k + 1) / 2;
  std::vector<std::vector<int>> offsets;
  std::vector<double> weights;
  {
    std::vector<int> off(static_cast<std::size_t>(k), -reach);
    while (true) {
      double r2 = 0.0;
      for (int v : off) r2 += static_cast<double>(v) * v;
      if (r2 < radius * radius) {
        offsets.push_back(off);
        weights.push_back(sq(1.0 - r2 / (radius * radius)));
      }
      int a = 0;
      while (a < k && ++off[static_cast<std::size_t>(a)] > reach) off[static_cast<std::size_t>(a++)] = -reach;
      if (a == k) break;
    }
  }
  DerivativeField out;
  out.grid = g;
  const std::size_t stride_node = static_cast<std::size_t>(k + k * k);
  out.data.assign(g.size() * stride_node, 0.0);
  out.valid.assign(g.size(), 0);
  Mat a(static_cast<Eigen::Index>(offsets.size()), n_coef);
  Vec b(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const auto idx = g.multi(lin);
    int rows = 0;
    std::vector<int> nb(static_cast<std::size_t>(k));
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      bool inside = true;
      for (int c = 0; c < k && inside; ++c) {
        nb[static_cast<std::size_t>(c)] = idx[static_cast<std::size_t>(c)] + offsets[o][static_cast<std::size_t>(c)];
        inside = nb[static_cast<std::size_t>(c)] >= 0 && nb[static_cast<std::size_t>(c)] < g.shape[static_cast<std::size_t>(c)];
      }
      if (!inside) continue;
      const std::size_t j = g.linear(nb);
      if (g.mask[j] == NodeKind::Outside) continue;
      const double sw = std::sqrt(weights[o]);
      int col = 0;
      a(rows, col++) = sw;
      for (int c = 0; c < k; ++c) a(rows, col++) = sw * offsets[o][static_cast<std::size_t>(c)];
      for (int c = 0; c < k; ++c)
        for (int e = c; e < k; ++e)
          a(rows, col++) = sw * offsets[o][static_cast<std::size_t>(c)] * offsets[o][static_cast<std::size_t>(e)] * (c == e ? 0.5 : 1.0);
      b[rows] = sw * field.values[j];
      ++rows;
    }
    if (rows < 2 * n_coef) continue;
    const Eigen::ColPivHouseholderQR<Mat> qr(a.topRows(rows));
    if (qr.rank() < n_coef) continue;
    const Vec coef = qr.solve(b.head(rows));
    double* d = out.data.data() + lin * stride_node;
    for (int c = 0; c < k; ++c) d[c] = coef[1 + c] / g.h;
    int col = 1 + k;
    for (int c = 0; c < k; ++c)
      for (int e = c; e < k; ++e) {
        const double v = coef[col++] / (g.h * g.h);
        d[k + c + e * k] = v;
        d[k + e + c * k] = v;
      }
    out.valid[lin] = 1;
  }
  return out;
}

}  // namespace mcflow
