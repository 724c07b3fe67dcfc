#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Symmetric d x d matrix (Hessians, test matrices M).
using SymMatrix = Eigen::MatrixXd;
/// Gradient-like vector p.
using GradVec = Eigen::VectorXd;

/// Thrown when a precondition on the numeric inputs is violated.
class NumericError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// descending (lambda_1 >= ... >= lambda_d); column i of `vectors` belongs to
/// `values[i]`.
struct SymEigen {
  Vec values;
  Mat vectors;
};

inline SymEigen sym_eigen(const Mat& m) {
  if (m.rows() != m.cols()) throw NumericError("sym_eigen: matrix not square");
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("sym_eigen: no convergence");
  const auto n = sym.rows();
  SymEigen out{Vec(n), Mat(n, n)};
  // Eigen returns ascending order.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = es.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

/// Orthonormal basis (d x (d-1)) of the orthogonal complement of p, from the
/// Householder reflection that maps e_1 to +-p/|p|.
inline Mat complement_basis(const Vec& p) {
  const auto d = p.size();
  const double norm = p.norm();
  if (!(norm > 0.0)) throw NumericError("complement_basis: zero vector");
  Vec v = p / norm;
  const double sign = v[0] >= 0.0 ? 1.0 : -1.0;
  v[0] += sign;
  const double vv = v.squaredNorm();
  Mat h = Mat::Identity(d, d) - (2.0 / vv) * v * v.transpose();
  // Column 0 of h is -sign * p/|p|; the remaining columns span p-perp.
  return h.rightCols(d - 1);
}

/// Numerical rank with singular values below rel_tol * max treated as zero.
inline int numerical_rank(const Mat& m, double rel_tol = 1e-10) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++r;
  return r;
}

/// Orthonormal basis of span(columns of `dirs`), built by projecting the
/// standard basis vectors onto that span and orthonormalising in order. For
/// axis-aligned spans this reproduces the coordinate axes exactly.
inline Mat span_basis(const Mat& dirs, double rel_tol = 1e-10) {
  const auto d = dirs.rows();
  if (dirs.cols() == 0) return Mat(d, 0);
  Eigen::JacobiSVD<Mat> svd(dirs, Eigen::ComputeThinU);
  const Vec& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[0] > 0.0 && s[i] > rel_tol * s[0]) ++r;
  if (r == 0) return Mat(d, 0);
  const Mat u = svd.matrixU().leftCols(r);
  const Mat proj = u * u.transpose();
  Mat basis(d, r);
  int k = 0;
  for (Eigen::Index i = 0; i < d && k < r; ++i) {
    Vec c = proj.col(i);
    for (int j = 0; j < k; ++j) c -= basis.col(j).dot(c) * basis.col(j);
    const double n = c.norm();
    if (n > 1e-8) basis.col(k++) = c / n;
  }
  if (k < r) throw NumericError("span_basis: failed to orthonormalise");
  // Snap round-off so axis-aligned spans give exact unit vectors.
  for (Eigen::Index i = 0; i < basis.size(); ++i)
    if (std::abs(basis.data()[i]) < 1e-15) basis.data()[i] = 0.0;
  return basis;
}

inline double sq(double x) { return x * x; }

/// Linear-interpolation quantile (type 7) of an ascending-sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

}  // namespace mcflow
