#include "mcflow/nonlinearity.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mcflow;

namespace {

Mat diag(std::initializer_list<double> d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v.asDiagonal();
}

Mat random_sym(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n01(rng);
  return 0.5 * (a + a.transpose());
}

Vec random_vec(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = n01(rng);
  return v;
}

}  // namespace

TEST(EvalF, HandWorkedCases) {
  EXPECT_NEAR(eval_F(Vec::Unit(3, 0), diag({2, -4, 6})), -3.0, 1e-14);
  EXPECT_NEAR(eval_F(Vec::Zero(2), diag({1, 2})), -1.0, 1e-14);
  const Vec p = Vec::Constant(2, 1.0 / std::sqrt(2.0));
  EXPECT_NEAR(eval_F(p, diag({1, -1})), 0.0, 1e-14);
  // The disc value function 1 - |x|^2 has Hessian -2I, so F = 1 away from 0.
  EXPECT_NEAR(eval_F(Vec::Unit(2, 1), -2.0 * Mat::Identity(2, 2)), 1.0, 1e-14);
}

TEST(EvalFUpper, EnvelopeAtZeroGradient) {
  EXPECT_NEAR(eval_F_upper(Vec::Zero(2), diag({1, 2})), -0.5, 1e-14);
  EXPECT_NEAR(eval_F_upper(Vec::Zero(3), Mat::Identity(3, 3)), -0.5, 1e-14);
  EXPECT_NEAR(eval_F_upper(Vec::Unit(3, 0), diag({2, -4, 6})), -3.0, 1e-14);
}

TEST(EvalF, ScaleAndRotationInvariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + trial % 3;
    const Mat m = random_sym(d, rng);
    const Vec p = random_vec(d, rng);
    const double f = eval_F(p, m);
    EXPECT_NEAR(eval_F(-3.7 * p, m), f, 1e-10);
    const Mat q = Eigen::HouseholderQR<Mat>(random_sym(d, rng) + 3.0 * Mat::Identity(d, d)).householderQ();
    EXPECT_NEAR(eval_F(q * p, q * m * q.transpose()), f, 1e-10);
  }
}

TEST(EvalF, DegenerateEllipticity) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 2 + trial % 3;
    const Mat m = random_sym(d, rng);
    const Mat g = random_sym(d, rng);
    const Mat n = m + g * g.transpose();  // N >= M
    const Vec p = random_vec(d, rng);
    EXPECT_GE(eval_F(p, m), eval_F(p, n) - 1e-12);
  }
}

TEST(LambdaMinOrth, CasesAndIdentityWithF) {
  EXPECT_NEAR(lambda_min_orth(diag({5, 1, 3}), Vec::Unit(3, 0)), 1.0, 1e-14);
  EXPECT_NEAR(lambda_min_orth(Mat::Identity(4, 4), Vec::Constant(4, 0.3)), 1.0, 1e-14);
  EXPECT_THROW(lambda_min_orth(Mat::Identity(2, 2), Vec::Zero(2)), NumericError);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 3;
    const Mat m = random_sym(d, rng);
    const Vec p = random_vec(d, rng);
    const Mat proj = Mat::Identity(d, d) - p * p.transpose() / p.squaredNorm();
    EXPECT_NEAR(lambda_min_orth(-0.5 * proj * m * proj, p), eval_F(p, m), 1e-10);
  }
}

TEST(LambdaMinOrth, SampledDirectionOracle) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3 + trial % 2;
    const Mat a = random_sym(d, rng);
    const Vec p = random_vec(d, rng);
    const Vec n = p.normalized();
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 200000; ++s) {
      Vec y = random_vec(d, rng);
      y -= y.dot(n) * n;
      best = std::min(best, y.dot(a * y) / y.squaredNorm());
    }
    EXPECT_NEAR(lambda_min_orth(a, p), best, 1e-3);
    EXPECT_LE(lambda_min_orth(a, p), best + 1e-12);
  }
}

TEST(ArgmaxTangent, AttainsTheSupremum) {
  const Vec y = argmax_tangent(Vec::Unit(3, 0), diag({0, -4, 6}));
  EXPECT_NEAR(std::abs(y[2]), 1.0, 1e-12);
  const Vec y2 = argmax_tangent(Vec::Unit(2, 1), diag({3, -7}));
  EXPECT_NEAR(std::abs(y2[0]), 1.0, 1e-12);

  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 3;
    const Mat m = random_sym(d, rng);
    const Vec p = random_vec(d, rng);
    const Vec t = argmax_tangent(p, m);
    EXPECT_NEAR(t.norm(), 1.0, 1e-12);
    EXPECT_LE(std::abs(t.dot(p)), 1e-10 * p.norm());
    EXPECT_NEAR(t.dot(m * t), -2.0 * eval_F(p, m), 1e-10);
    const Vec n = p.normalized();
    for (int s = 0; s < 1000; ++s) {
      Vec z = random_vec(d, rng);
      z -= z.dot(n) * n;
      z.normalize();
      EXPECT_GE(t.dot(m * t), z.dot(m * z) - 1e-6);
    }
  }
}

TEST(KernelControl, ExplicitKernel) {
  const auto a = kernel_control(Vec::Unit(2, 1), diag({-2, 0}));
  ASSERT_TRUE(a.has_value());
  EXPECT_LE((*a - diag({1, 0})).norm(), 1e-12);
}

TEST(KernelControl, DiscValueFunctionGivesTangentialControl) {
  for (int d = 2; d <= 3; ++d) {
    Vec x = Vec::Zero(d);
    x[0] = 0.5;
    x[d - 1] += 0.2;
    const auto a = kernel_control(-2.0 * x, -2.0 * Mat::Identity(d, d));
    ASSERT_TRUE(a.has_value());
    const Vec n = x.normalized();
    const Mat tangent = (Mat::Identity(d, d) - n * n.transpose()) / static_cast<double>(d - 1);
    EXPECT_LE((*a - tangent).norm(), 1e-12);
    EXPECT_NEAR(a->trace(), 1.0, 1e-12);
    // Optimality identities: a grad = 0 and 1 + tr(a hess)/2 = 0.
    EXPECT_LE((*a * x).norm(), 1e-12);
    EXPECT_NEAR(1.0 + 0.5 * (*a * (-2.0 * Mat::Identity(d, d))).trace(), 0.0, 1e-12);
  }
}

TEST(KernelControl, RandomSingularH) {
  std::mt19937_64 rng(12);
  const double tol = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 3;
    const Vec p = random_vec(d, rng);
    const Mat q = complement_basis(p);  // d x (d-1)
    // Choose hess so that H = 1/2 P hess P + I has eigenvalue 0 along q.col(0).
    Vec lam(d - 1);
    lam << -2.0, 1.0 + std::abs(random_vec(1, rng)[0]);
    const Mat hess = q * lam.asDiagonal() * q.transpose();
    const auto a = kernel_control(p, hess, tol);
    ASSERT_TRUE(a.has_value());
    const Mat proj = Mat::Identity(d, d) - p * p.transpose() / p.squaredNorm();
    const Mat h = 0.5 * proj * hess * proj + Mat::Identity(d, d);
    EXPECT_LE((h * *a).norm(), 10.0 * tol);
    EXPECT_NEAR(a->trace(), 1.0, 1e-10);
    EXPECT_GE(sym_eigen(*a).values[d - 1], -1e-10);
    EXPECT_LE((*a * p).norm(), 1e-10 * p.norm());
  }
}

TEST(KernelControl, NonsingularAndCritical) {
  EXPECT_FALSE(kernel_control(Vec::Unit(2, 0), Mat::Zero(2, 2)).has_value());
  EXPECT_THROW(kernel_control(Vec::Zero(2), Mat::Zero(2, 2)), NumericError);
}

TEST(CriticalRotationPlane, TopEigenvectors) {
  auto [w1, w2] = critical_rotation_plane(diag({3, 2, 1}));
  EXPECT_NEAR(std::abs(w1[0]), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(w2[1]), 1.0, 1e-12);
  auto [a, b] = critical_rotation_plane(-2.0 * Mat::Identity(3, 3));
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_NEAR(b.norm(), 1.0, 1e-12);
  EXPECT_NEAR(a.dot(b), 0.0, 1e-12);
  auto [c, e] = critical_rotation_plane(diag({1, 1, -5}));
  EXPECT_NEAR(c[2], 0.0, 1e-12);
  EXPECT_NEAR(e[2], 0.0, 1e-12);
}
