#pragma once

// The degenerate elliptic operator
//   F(p, M) = -1/2 sup { y^T M y : |y| = 1, y . p = 0 }   (p != 0)
//   F(0, M) = -lambda_1(M) / 2
// together with its upper envelope, the constrained-eigenvalue form, the
// maximizing tangent direction and the kernel-projection control matrix.

#include "mcflow/linalg.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace mcflow {

/// |p| below this (scaled by 1 + |M|) is treated as a critical point.
inline bool is_critical(const GradVec& p, const SymMatrix& m) {
  return p.norm() < 1e-10 * (1.0 + m.norm());
}

namespace detail {

inline void check_shapes(const GradVec& p, const SymMatrix& m) {
  if (m.rows() != m.cols() || m.rows() != p.size()) throw NumericError("F: dimension mismatch");
  if (!p.allFinite() || !m.allFinite()) throw NumericError("F: non-finite input");
}

/// Q^T M Q for Q an orthonormal basis of p-perp.
inline Mat tangential_block(const GradVec& p, const SymMatrix& m, Mat* q_out = nullptr) {
  const Mat q = complement_basis(p);
  if (q_out) *q_out = q;
  return q.transpose() * (0.5 * (m + m.transpose())) * q;
}

}  // namespace detail

/// F(p, M). For d = 1 and p != 0 there is no tangent direction and the
/// supremum over the empty set makes F = +infinity.
inline double eval_F(const GradVec& p, const SymMatrix& m) {
  detail::check_shapes(p, m);
  if (is_critical(p, m)) return -0.5 * sym_eigen(m).values[0];
  if (p.size() == 1) return std::numeric_limits<double>::infinity();
  return -0.5 * sym_eigen(detail::tangential_block(p, m)).values[0];
}

/// Upper semicontinuous envelope F^*: equals F off p = 0 and -lambda_2(M)/2
/// at p = 0.
inline double eval_F_upper(const GradVec& p, const SymMatrix& m) {
  detail::check_shapes(p, m);
  if (!is_critical(p, m)) return eval_F(p, m);
  const Vec ev = sym_eigen(m).values;
  return -0.5 * (ev.size() >= 2 ? ev[1] : ev[0]);
}

/// Smallest eigenvalue of A restricted to p-perp.
inline double lambda_min_orth(const SymMatrix& a, const GradVec& p) {
  detail::check_shapes(p, a);
  if (!(p.norm() > 0.0)) throw NumericError("lambda_min_orth: p = 0");
  if (p.size() == 1) throw NumericError("lambda_min_orth: p-perp is trivial in d = 1");
  const Vec ev = sym_eigen(detail::tangential_block(p, a)).values;
  return ev[ev.size() - 1];
}

/// Unit y with y . p = 0 maximizing y^T M y. The sign is fixed so that the
/// first non-negligible entry is positive.
inline Vec argmax_tangent(const GradVec& p, const SymMatrix& m) {
  detail::check_shapes(p, m);
  if (!(p.norm() > 0.0)) throw NumericError("argmax_tangent: p = 0");
  if (p.size() < 2) throw NumericError("argmax_tangent: needs d >= 2");
  Mat q;
  const SymEigen es = sym_eigen(detail::tangential_block(p, m, &q));
  Vec y = q * es.vectors.col(0);
  y.normalize();
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (std::abs(y[i]) > 1e-12) {
      if (y[i] < 0.0) y = -y;
      break;
    }
  }
  return y;
}

/// a = (I - H^+ H) / (d - r) with H = 1/2 P hess P + I, P = I - p p^T/|p|^2
/// and r the numerical rank of H. Returns nullopt when H is numerically
/// nonsingular (the field does not solve F = 1 at this point).
inline std::optional<Mat> kernel_control(const GradVec& grad, const SymMatrix& hess, double rank_tol = 1e-6) {
  detail::check_shapes(grad, hess);
  const double gn = grad.norm();
  if (!(gn > 0.0)) throw NumericError("kernel_control: zero gradient");
  const auto d = grad.size();
  const Vec n = grad / gn;
  const Mat p = Mat::Identity(d, d) - n * n.transpose();
  const Mat h = 0.5 * p * (0.5 * (hess + hess.transpose())) * p + Mat::Identity(d, d);
  const SymEigen es = sym_eigen(h);
  const double scale = std::max(1.0, es.values.cwiseAbs().maxCoeff());
  Mat a = Mat::Zero(d, d);
  int nullity = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(es.values[i]) <= rank_tol * scale) {
      a += es.vectors.col(i) * es.vectors.col(i).transpose();
      ++nullity;
    }
  }
  if (nullity == 0) return std::nullopt;
  return a / static_cast<double>(nullity);
}

/// Orthonormal eigenvectors of the two largest eigenvalues of hess.
inline std::pair<Vec, Vec> critical_rotation_plane(const SymMatrix& hess) {
  if (hess.rows() < 2 || hess.rows() != hess.cols()) throw NumericError("critical_rotation_plane: needs d >= 2");
  const SymEigen es = sym_eigen(hess);
  return {es.vectors.col(0), es.vectors.col(1)};
}

}  // namespace mcflow
