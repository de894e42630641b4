#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rcc/analysis.hpp"

using namespace rcc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset small_dataset() {
  Dataset ds;
  ds.features.resize(3, 3);
  ds.features << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  ds.labels = vec({1, 7, 1});
  return ds;
}

}  // namespace

TEST(BudgetRatio, Examples) {
  EXPECT_DOUBLE_EQ(ratio_theorem2(vec({1, 1, 1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(ratio_theorem2(vec({1, 7})), 1.5625);
  for (int a = 1; a <= 9; ++a)
    EXPECT_NEAR(ratio_theorem2(vec({-1, -double(a), 1})), 3.0 * (2 + a * a) / ((2.0 + a) * (2.0 + a)), 1e-15);
  EXPECT_NEAR(ratio_theorem2(vec({-1, -9, 1})), 249.0 / 121.0, 1e-15);
}

TEST(BudgetRatio, BoundsAndInvariance) {
  Engine eng(1);
  std::normal_distribution<double> g;
  for (int k = 0; k < 500; ++k) {
    Vector w(5);
    for (auto& x : w) x = g(eng);
    const double r = ratio_theorem2(w);
    EXPECT_GE(r, 1.0 - 1e-12);
    EXPECT_LE(r, 5.0 + 1e-12);
    EXPECT_NEAR(ratio_theorem2(-3.7 * w), r, 1e-12);
  }
  EXPECT_DOUBLE_EQ(ratio_theorem2(vec({0, 0, 2, 0})), 4.0);
  EXPECT_THROW(ratio_theorem2(vec({0, 0})), Error);
}

TEST(EqualLossBudget, ClosedFormInversions) {
  const Dataset ds = small_dataset();
  const LinearClassifier c{vec({1, 7, 1}), 0.0};
  const auto nm = NoiseModel::inverse_sqrt();
  const double target = mean_squared_error(ds, c) + 9.0;
  const double ro = equal_loss_budget(ds, c, nm, target, BudgetRule::Optimal);
  const double ru = equal_loss_budget(ds, c, nm, target, BudgetRule::Uniform);
  EXPECT_NEAR(ro, 9.0, 1e-9);
  EXPECT_NEAR(ru, 17.0, 1e-9);
  EXPECT_NEAR(ru / ro, ratio_theorem2(c.weights), 1e-5 * ratio_theorem2(c.weights));
}

TEST(EqualLossBudget, RatioMatchesNormRatioOnRandomClassifiers) {
  Engine eng(4);
  std::normal_distribution<double> g;
  const Dataset ds = small_dataset();
  for (int k = 0; k < 50; ++k) {
    Vector w(3);
    for (auto& x : w) x = g(eng);
    const LinearClassifier c{w, 0.3};
    const double target = mean_squared_error(ds, c) + 0.5;
    const auto rep = ratio_report(ds, c, NoiseModel::inverse_sqrt(), target);
    EXPECT_NEAR(rep.empirical_ratio, rep.theoretical_ratio, 1e-5 * rep.theoretical_ratio);
  }
}

TEST(EqualLossBudget, UnattainableBelowFloor) {
  const Dataset ds = small_dataset();
  const LinearClassifier c{vec({1, 1, 1}), 0.0};
  try {
    equal_loss_budget(ds, c, NoiseModel::inverse_sqrt(), mean_squared_error(ds, c), BudgetRule::Optimal);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnattainableLoss);
  }
}

TEST(RetrainedRatioBounds, Examples) {
  const auto [lo, hi] = corollary3_bounds(vec({1, 1}), vec({1, 3}));
  EXPECT_DOUBLE_EQ(lo, 1.0);
  EXPECT_DOUBLE_EQ(hi, 1.25);
  const auto [a, b] = corollary3_bounds(vec({2, 5}), vec({2, 5}));
  EXPECT_DOUBLE_EQ(a, b);
}

TEST(Convexity, AffineHasNoViolations) {
  auto affine = [](const Vector& r) { return 3.0 - r.dot(vec({0.5, 1, 2})); };
  Engine eng(2);
  EXPECT_EQ(verify_convexity(affine, simplex_segments(3, 4.0, 0.0), 10000, eng).violations, 0u);
}

TEST(Convexity, ConcaveSigmaIsReported) {
  // sigma(r)^2 = sqrt(5 - r) is concave and decreasing on [0, 4]
  std::vector<double> knots, vals;
  for (double r = 0.05; r <= 4.0; r += 0.05) {
    knots.push_back(r);
    vals.push_back(std::pow(5.0 - r, 0.25));
  }
  const auto nm = NoiseModel::tabulated({{knots, vals}});
  const LinearClassifier c{vec({1, 1}), 0.0};
  Dataset ds;
  ds.features = Matrix::Zero(1, 2);
  ds.labels = vec({0.0});
  auto loss = [&](const Vector& r) { return square_loss_total(ds, c, ResourceVector(r, 4.0), nm).total; };
  Engine eng(3);
  const auto rep = verify_convexity(loss, simplex_segments(2, 4.0, 0.1), 2000, eng);
  EXPECT_GT(rep.violations, 0u);
}

TEST(Convexity, SquareLossInverseSqrt) {
  const Dataset ds = small_dataset();
  const LinearClassifier c{vec({1, 7, 1}), 0.0};
  const auto nm = NoiseModel::inverse_sqrt();
  auto loss = [&](const Vector& r) { return square_loss_total(ds, c, ResourceVector(r, 9.0), nm).total; };
  Engine eng(5);
  EXPECT_EQ(verify_convexity(loss, simplex_segments(3, 9.0, 1e-3), 10000, eng).violations, 0u);
}
