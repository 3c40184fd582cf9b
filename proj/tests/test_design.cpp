#include <gtest/gtest.h>

#include "rkhs_oed/design.hpp"

#include <random>

using namespace rkhs_oed;

namespace {

Mat randn(int r, int c, std::mt19937_64 &rng) {
  std::normal_distribution<double> n01;
  Mat A(r, c);
  for (int i = 0; i < A.size(); ++i) A.data()[i] = n01(rng);
  return A;
}

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

DesignObjective ridge_obj(const Mat &C, Scalarization k = Scalarization::E, double lam = 1.0, double sigma = 1.0) {
  return DesignObjective(k, EstimatorKind::ridge, LinearFunctional::make(C), PriorOperator::identity(C.cols()), lam,
                         sigma);
}

double scalarize_value(const DesignObjective &obj, const Mat &X, const Vec &w) {
  const Mat W = weighted_info_matrix(X, w / w.sum(), obj.functionals[0], obj.V0, obj.estimator, obj.lam, obj.sigma,
                                     w.sum())
                    .matrix;
  return obj.kind == Scalarization::E ? lambda_min(W) : W.trace();
}

// C = (1, 1) on the standard basis: W = 1 / (1/(1+w1) + 1/(1+w2)), maximised at (1/2, 1/2)
DesignObjective symmetric_pair() { return ridge_obj(Mat::Ones(1, 2)); }

}  // namespace

TEST(Objective, IdentityTwoByTwo) {
  const auto obj = ridge_obj(Mat::Identity(2, 2));
  EXPECT_NEAR(evaluate_objective(obj, make_allocation(Mat::Identity(2, 2), vec({0.5, 0.5}))), 1.5, 1e-14);
  EXPECT_NEAR(evaluate_objective(ridge_obj(Mat::Identity(2, 2), Scalarization::A),
                                 make_allocation(Mat::Identity(2, 2), vec({0.5, 0.5}))),
              3.0, 1e-14);
}

TEST(Objective, PermutationInvariant) {
  std::mt19937_64 rng(1);
  const Mat X = randn(5, 4, rng), C = randn(2, 4, rng);
  Vec eta = randn(5, 1, rng).cwiseAbs();
  eta /= eta.sum();
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  Mat Xp(5, 4);
  Vec ep(5);
  for (int i = 0; i < 5; ++i) {
    Xp.row(i) = X.row(perm[i]);
    ep(i) = eta(perm[i]);
  }
  for (auto k : {Scalarization::E, Scalarization::A}) {
    const auto obj = ridge_obj(C, k, 0.5, 0.3);
    EXPECT_NEAR(evaluate_objective(obj, make_allocation(X, eta)), evaluate_objective(obj, make_allocation(Xp, ep)),
                1e-10 * std::abs(evaluate_objective(obj, make_allocation(X, eta))));
  }
}

TEST(Objective, SingletonFamilyEqualsPlain) {
  std::mt19937_64 rng(2);
  const Mat X = randn(6, 4, rng), C = randn(2, 4, rng);
  FunctionalFamily fam{[&](const Vec &) { return LinearFunctional::make(C); }, {vec({1.0})}};
  const DesignObjective robust(Scalarization::E, EstimatorKind::ridge, fam, PriorOperator::identity(4), 1.0, 1.0);
  const Vec eta = Vec::Constant(6, 1.0 / 6);
  EXPECT_EQ(evaluate_objective(robust, make_allocation(X, eta)),
            evaluate_objective(ridge_obj(C), make_allocation(X, eta)));
}

TEST(Objective, UnidentifiableInterpIsMinusInfinity) {
  const DesignObjective obj(Scalarization::E, EstimatorKind::interp, LinearFunctional::make(Mat::Identity(2, 2)),
                            PriorOperator::identity(2), 1.0, 1.0);
  EXPECT_EQ(evaluate_objective(obj, make_allocation(Mat::Identity(2, 2), vec({1.0, 0.0}))),
            -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(evaluate_objective(obj, make_allocation(Mat::Identity(2, 2), vec({0.5, 0.5}))), 0.5, 1e-14);
}

TEST(Objective, RejectsOffSimplex) {
  EXPECT_THROW(evaluate_objective(symmetric_pair(), make_allocation(Mat::Identity(2, 2), vec({0.7, 0.7}))), Error);
}

TEST(Greedy, SingleCandidate) {
  const auto a = greedy_design(ridge_obj(Mat::Ones(1, 1)), Mat::Ones(1, 1), 5);
  ASSERT_EQ(a.eta.size(), 1);
  EXPECT_EQ(a.eta(0), 1.0);
  EXPECT_EQ((*a.counts)[0], 5);
}

TEST(Greedy, StandardBasisEvenBudgetIsBalanced) {
  for (int T : {4, 6, 10, 20}) {
    const auto a = greedy_design(ridge_obj(Mat::Identity(2, 2)), Mat::Identity(2, 2), T);
    EXPECT_DOUBLE_EQ(a.eta(0), 0.5) << "T=" << T;
    EXPECT_DOUBLE_EQ(a.eta(1), 0.5) << "T=" << T;
    EXPECT_EQ((*a.counts)[0] + (*a.counts)[1], T);
  }
}

TEST(Greedy, MatchesBruteForceScoring) {
  std::mt19937_64 rng(3);
  const Mat X = randn(12, 5, rng), C = randn(2, 5, rng);
  const auto obj = ridge_obj(C, Scalarization::A, 0.7, 0.4);
  const auto a = greedy_design(obj, X, 10);
  // replay: each step must pick the argmax of the direct evaluation
  std::vector<int> seeds = default_seeds(12, 2);
  Vec w = Vec::Zero(12);
  for (int s : seeds) w(s) += 1;
  for (size_t t = 1; t < a.trace.size(); ++t) {
    double best = -1e300;
    int arg = -1;
    for (int j = 0; j < 12; ++j) {
      Vec c = w;
      c(j) += 1;
      const double v = scalarize_value(obj, X, c);
      if (v > best + 1e-12 * std::abs(best)) {
        best = v;
        arg = j;
      }
    }
    EXPECT_NEAR(a.trace[t], best, 1e-9 * std::abs(best));
    w(arg) += 1;
  }
  for (int j = 0; j < 12; ++j) EXPECT_EQ((*a.counts)[j], static_cast<int>(w(j)));
}

TEST(Greedy, RejectsInterp) {
  const DesignObjective obj(Scalarization::E, EstimatorKind::interp, LinearFunctional::make(Mat::Identity(2, 2)),
                            PriorOperator::identity(2), 1.0, 1.0);
  try {
    greedy_design(obj, Mat::Identity(2, 2), 4);
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("mirror_descent_design"), std::string::npos);
  }
}

TEST(Greedy, BudgetBelowSeedsThrows) {
  EXPECT_THROW(greedy_design(ridge_obj(Mat::Identity(2, 2)), Mat::Identity(2, 2), 2), Error);
}

TEST(MirrorDescent, ConstantObjectiveStaysUniform) {
  // A-objective with C = I on the basis: trace(I + D) = 3 regardless of eta
  const auto a = mirror_descent_design(ridge_obj(Mat::Identity(2, 2), Scalarization::A), Mat::Identity(2, 2), 50, 1.0);
  EXPECT_EQ(a.eta(0), 0.5);
  EXPECT_EQ(a.eta(1), 0.5);
}

TEST(MirrorDescent, SymmetricPairConverges) {
  Vec init = vec({0.9, 0.1});
  const auto a = mirror_descent_design(symmetric_pair(), Mat::Identity(2, 2), 500, 0.5, init);
  EXPECT_NEAR(a.eta(0), 0.5, 1e-3);
  EXPECT_NEAR(a.eta(1), 0.5, 1e-3);
  EXPECT_NEAR(a.eta.sum(), 1.0, 1e-12);
}

TEST(MirrorDescent, NonDifferentiableStartThrows) {
  const DesignObjective obj(Scalarization::E, EstimatorKind::interp, LinearFunctional::make(Mat::Identity(2, 2)),
                            PriorOperator::identity(2), 1.0, 1.0);
  EXPECT_THROW(mirror_descent_design(obj, Mat::Identity(2, 2), 10, 1.0, vec({1.0, 0.0})), Error);
}

TEST(GridSearch, ResolutionOneFindsBestVertex) {
  Mat C(1, 3);
  C << 0.2, 1.0, 0.5;
  const auto a = grid_search_design(ridge_obj(C), Mat::Identity(3, 3), 1);
  EXPECT_EQ(a.eta, vec({0.0, 1.0, 0.0}));
}

TEST(GridSearch, SymmetricPair) {
  const auto a = grid_search_design(symmetric_pair(), Mat::Identity(2, 2), 100);
  EXPECT_DOUBLE_EQ(a.eta(0), 0.5);
  EXPECT_DOUBLE_EQ(a.eta(1), 0.5);
}

TEST(GridSearch, TooManyPointsThrows) {
  EXPECT_THROW(grid_search_design(ridge_obj(Mat::Ones(1, 5)), Mat::Identity(5, 5), 10), Error);
}

TEST(Rounding, Examples) {
  const Mat X = Mat::Identity(5, 5);
  auto c = round_allocation(make_allocation(Mat::Identity(2, 2), vec({1.0, 0.0})), 10).counts;
  EXPECT_EQ(*c, (std::vector<int>{10, 0}));
  c = round_allocation(make_allocation(Mat::Identity(2, 2), vec({0.5, 0.5})), 3).counts;
  EXPECT_EQ(*c, (std::vector<int>{2, 2}));
  // these weights sum to 1.01; normalised they round to the same counts
  Vec star = vec({0.37, 0.09, 0.08, 0.09, 0.38});
  star /= star.sum();
  c = round_allocation(make_allocation(X, star), 100).counts;
  EXPECT_EQ(*c, (std::vector<int>{37, 9, 8, 9, 38}));
  EXPECT_THROW(round_allocation(make_allocation(X, Vec::Constant(5, 0.2)), 0), Error);
}

TEST(Rounding, TinyPositiveWeightGetsOneCount) {
  const auto c = round_allocation(make_allocation(Mat::Identity(2, 2), vec({1 - 1e-6, 1e-6})), 10).counts;
  EXPECT_EQ(*c, (std::vector<int>{10, 1}));
}

TEST(Rounding, TrimToBudget) {
  const Vec eta = vec({0.5, 0.5});
  EXPECT_EQ(trim_to_budget({2, 2}, eta, 3), (std::vector<int>{1, 2}));
  const Vec e3 = vec({0.34, 0.33, 0.33});
  EXPECT_EQ(trim_to_budget({4, 4, 4}, e3, 10), (std::vector<int>{4, 3, 3}));
}

TEST(QueryComplexity, FormulaInversion) {
  const double x = xi(0.1, 1);
  EXPECT_EQ(query_complexity(1.0, 1, 1.0, 1.0, 0.0, 1.0, 0.1), static_cast<long>(std::ceil(x)));
  EXPECT_EQ(query_complexity(1.0, 1, 1.0, 1.0, 0.0, 1.0, 0.1), 5);
}

TEST(QueryComplexity, QuadruplingInverseLambdaMin) {
  const long T1 = query_complexity(0.05, 2, 0.8, 0.3, 0.0, 1.0, 0.1);
  const long T4 = query_complexity(0.05, 2, 0.2, 0.3, 0.0, 1.0, 0.1);
  EXPECT_GE(T4, 4 * T1 - 3);
  EXPECT_LE(T4, 4 * T1);
}

TEST(QueryComplexity, MinimalityAndBiasFloor) {
  const double eps = 0.1, lm = 0.5, s = 0.2, nu = 0.02, lam = 1.0;
  const long T = query_complexity(eps, 2, lm, s, nu, lam, 0.05);
  auto bound = [&](long t) {
    return std::sqrt(1 / (lm * t)) * s * std::sqrt(xi(0.05, 2)) + nu / std::sqrt(lam * lm);
  };
  EXPECT_LE(bound(T), eps);
  EXPECT_GT(bound(T - 1), eps);
  EXPECT_THROW(query_complexity(0.01, 2, lm, s, nu, lam, 0.05), Error);
}

TEST(BiasVariance, NoNoisePicksSmallestH) {
  const FeatureMap f = qff_squared_exponential(0.1, 256, Vec::Constant(2, -1), Vec::Constant(2, 1));
  const Vec x = Vec::Zero(2);
  auto family = [&](double h) {
    std::vector<Vec> pts = {x, x + h * Vec::Unit(2, 0), x + 2 * h * Vec::Unit(2, 0), x - h * Vec::Unit(2, 0),
                            x - h * Vec::Unit(2, 1)};
    return FamilyDesign{evaluate_design_matrix(f, pts), gradient_functional(f, x), PriorOperator::identity(256)};
  };
  const std::vector<double> grid = {0.02, 0.05, 0.1, 0.2};
  auto saved = warning_sink();
  warning_sink() = [](const std::string &) {};
  const auto r = balance_bias_variance(family, grid, 0.0, 1.0, 0.1, 100);
  warning_sink() = saved;
  EXPECT_EQ(r.h_star, 0.02);
  EXPECT_TRUE(r.boundary);
}

TEST(BiasVariance, ZeroBiasPicksLargestLambdaMin) {
  // W = sin^2(pi h), peaks at h = 1/2
  auto family = [](double h) {
    return FamilyDesign{Mat::Constant(1, 1, std::sin(M_PI * h)), LinearFunctional::make(Mat::Ones(1, 1)),
                        PriorOperator::identity(1)};
  };
  const auto r = balance_bias_variance(family, {0.1, 0.3, 0.5, 0.6, 0.8}, 0.1, 1.0, 0.1, 100);
  EXPECT_EQ(r.h_star, 0.5);
  EXPECT_FALSE(r.boundary);
  for (const auto &row : r.rows) EXPECT_LT(row.nu, 1e-12);
}

TEST(BiasVariance, MonotoneCurveWarns) {
  std::vector<std::string> seen;
  auto saved = warning_sink();
  warning_sink() = [&](const std::string &m) { seen.push_back(m); };
  auto family = [](double h) {
    return FamilyDesign{Mat::Constant(1, 1, h), LinearFunctional::make(Mat::Ones(1, 1)), PriorOperator::identity(1)};
  };
  const auto r = balance_bias_variance(family, {0.1, 0.2, 0.4}, 0.1, 1.0, 0.1, 10);
  warning_sink() = saved;
  EXPECT_EQ(r.h_star, 0.4);
  EXPECT_TRUE(r.boundary);
  EXPECT_FALSE(seen.empty());
}

TEST(Geometry, LinearMapExactValue) {
  const auto g = gradient_design_geometry_check(linear_features(1), Vec::Zero(1), {1e-3, 1e-2, 1e-1});
  for (const auto &r : g.rows) {
    EXPECT_GT(r.inv_lambda_min, 0);
    EXPECT_NEAR(r.inv_lambda_min, 1.0 / (r.h * r.h), 1e-9 / (r.h * r.h));
  }
  EXPECT_TRUE(g.all_hold);
}

TEST(Geometry, SquaredExponentialTwoDim) {
  const FeatureMap f = qff_squared_exponential(0.5, 256, Vec::Constant(2, -1), Vec::Constant(2, 1));
  const auto g = gradient_design_geometry_check(f, Vec::Zero(2), {1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1});
  for (const auto &r : g.rows) {
    EXPECT_GT(r.inv_lambda_min, 0);
    EXPECT_TRUE(r.holds) << "h=" << r.h;
  }
  EXPECT_TRUE(g.all_hold);
}
