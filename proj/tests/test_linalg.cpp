#include "mcflow/linalg.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mcflow;

TEST(SymEigen, SortsDescendingWithMatchingVectors) {
  Mat m(3, 3);
  m << 2, 1, 0, 1, 2, 0, 0, 0, -1;
  const SymEigen es = sym_eigen(m);
  EXPECT_NEAR(es.values[0], 3.0, 1e-12);
  EXPECT_NEAR(es.values[1], 1.0, 1e-12);
  EXPECT_NEAR(es.values[2], -1.0, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_LE((m * es.vectors.col(i) - es.values[i] * es.vectors.col(i)).norm(), 1e-12);
}

TEST(ComplementBasis, IsOrthonormalAndOrthogonalToP) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int d = 2; d <= 5; ++d) {
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = n01(rng);
    const Mat q = complement_basis(p);
    ASSERT_EQ(q.cols(), d - 1);
    EXPECT_LE((q.transpose() * q - Mat::Identity(d - 1, d - 1)).norm(), 1e-12);
    EXPECT_LE((q.transpose() * p).norm(), 1e-12 * p.norm());
  }
  EXPECT_THROW(complement_basis(Vec::Zero(3)), NumericError);
}

TEST(NumericalRank, CountsSingularValuesAboveTolerance) {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-3;
  EXPECT_EQ(numerical_rank(m), 2);
  m(1, 1) = 1e-14;
  EXPECT_EQ(numerical_rank(m), 1);
}

TEST(SpanBasis, SpansTheColumnSpace) {
  Mat dirs(3, 3);
  dirs << 1, 2, 0, 0, 0, 0, 1, 2, 1;  // columns 1 and 2 are parallel
  const Mat b = span_basis(dirs);
  ASSERT_EQ(b.cols(), 2);
  EXPECT_LE((b.transpose() * b - Mat::Identity(2, 2)).norm(), 1e-12);
  for (int c = 0; c < 3; ++c) EXPECT_LE((dirs.col(c) - b * (b.transpose() * dirs.col(c))).norm(), 1e-12);
}

TEST(SortedQuantile, InterpolatesLinearly) {
  const std::vector<double> v{0.0, 1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.125), 0.5);
  EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 4.0);
}
