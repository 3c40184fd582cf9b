#include <gtest/gtest.h>

#include "rkhs_oed/quadrature.hpp"

#include <random>

using namespace rkhs_oed;

TEST(Linalg, PinvMatchesNormalEquationsOnFullColumnRank) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  Mat A(7, 3);
  for (int i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
  const Mat ref = (A.transpose() * A).inverse() * A.transpose();
  EXPECT_LT((pinv(A) - ref).norm(), 1e-10);
}

TEST(Linalg, PinvDropsTinySingularValues) {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 1e-14;
  const Mat P = pinv(A);
  EXPECT_DOUBLE_EQ(P(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(P(1, 1), 0.0);
  EXPECT_EQ(numerical_rank(A), 1);
}

TEST(Linalg, LogdetAgreesWithDeterminant) {
  Mat A(3, 3);
  A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  EXPECT_NEAR(logdet_spd(A), std::log(A.determinant()), 1e-12);
}

TEST(Linalg, SpdSolveFallsBackWithWarning) {
  std::vector<std::string> seen;
  auto saved = warning_sink();
  warning_sink() = [&](const std::string &m) { seen.push_back(m); };
  Mat A(2, 2);
  A << 1, 1, 1, 1;
  Vec b(2);
  b << 2, 2;
  const Vec x = spd_solve(A, b);
  warning_sink() = saved;
  EXPECT_FALSE(seen.empty());
  EXPECT_NEAR(x(0), 1.0, 1e-12);
  EXPECT_NEAR(x(1), 1.0, 1e-12);
}

TEST(Linalg, GroupRowsIsByteExact) {
  Mat X(4, 2);
  X << 1, 2, 3, 4, 1, 2, 1, 2 + 1e-15;
  const RowGroups g = group_rows(X);
  EXPECT_EQ(g.unique.rows(), 3);
  EXPECT_EQ(g.group_of[0], g.group_of[2]);
  EXPECT_NE(g.group_of[0], g.group_of[3]);
  Vec y(4);
  y << 1, 5, 3, 7;
  const Vec avg = group_average(g, y);
  EXPECT_DOUBLE_EQ(avg(g.group_of[0]), 2.0);
}

TEST(Quadrature, GaussHermiteIntegratesPolynomials) {
  Vec t, w;
  gauss_hermite(10, t, w);
  // int t^k exp(-t^2) dt = Gamma((k+1)/2) for even k
  for (int k = 0; k <= 18; k += 2) {
    double s = 0;
    for (int i = 0; i < 10; ++i) s += w(i) * std::pow(t(i), k);
    EXPECT_NEAR(s, std::tgamma((k + 1) / 2.0), 1e-9 * std::tgamma((k + 1) / 2.0)) << "k=" << k;
  }
  for (int i = 0; i < 5; ++i) EXPECT_EQ(t(i), -t(9 - i));
}

TEST(Quadrature, GaussLegendreExactMoments) {
  const QuadratureRule r = gauss_legendre(8, 0.0, 2.0);
  for (int k = 0; k < 16; ++k) {
    double s = 0;
    for (size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i](0), k);
    EXPECT_NEAR(s, std::pow(2.0, k + 1) / (k + 1), 1e-10 * std::pow(2.0, k + 1));
  }
}
