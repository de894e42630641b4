#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rcc/analysis.hpp"
#include "rcc/losses.hpp"
#include "rcc/oracle.hpp"

using namespace rcc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Dataset random_dataset(int m, int d, std::uint64_t seed) {
  Engine eng(seed);
  std::normal_distribution<double> g;
  Dataset ds;
  ds.features.resize(m, d);
  ds.labels.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) ds.features(i, j) = g(eng);
    ds.labels[i] = g(eng) > 0 ? 1.0 : -1.0;
  }
  return ds;
}

}  // namespace

TEST(SquareLoss, ZeroClassifier) {
  const Dataset ds = random_dataset(40, 3, 1);
  const auto v = square_loss_total(ds, LinearClassifier::zeros(3), ResourceVector::uniform(3, 3),
                                   NoiseModel::inverse_sqrt());
  EXPECT_DOUBLE_EQ(v.total, 1.0);
  EXPECT_DOUBLE_EQ(v.noise_term, 0.0);
}

TEST(SquareLoss, VanishingNoise) {
  const Dataset ds = random_dataset(40, 3, 2);
  const LinearClassifier c{vec({1, 2, 3}), 0.5};
  const auto v = square_loss_total(ds, c, ResourceVector::uniform(3, 3e14), NoiseModel::inverse_sqrt());
  EXPECT_NEAR(v.total, mean_squared_error(ds, c), 1e-12);
}

TEST(SquareLoss, NoiseTermIdentities) {
  const Dataset ds = random_dataset(10, 3, 3);
  const LinearClassifier c{vec({1, 7, 1}), 0.0};
  const auto nm = NoiseModel::inverse_sqrt();
  EXPECT_NEAR(square_loss_total(ds, c, allocate_inverse_sqrt(c, 9.0), nm).noise_term, 9.0, 1e-12);
  EXPECT_NEAR(square_loss_total(ds, c, ResourceVector::uniform(3, 9.0), nm).noise_term, 3.0 * 51.0 / 9.0, 1e-12);
}

TEST(SquareLoss, Decomposition) {
  const Dataset ds = random_dataset(25, 4, 4);
  const LinearClassifier c{vec({0.1, -2, 0.3, 1}), -0.2};
  const auto v = square_loss_total(ds, c, ResourceVector(vec({1, 2, 0.5, 0.5}), 4.0), NoiseModel::inverse());
  EXPECT_EQ(v.total - v.data_term - v.noise_term, 0.0);
}

TEST(SquareLoss, ConvexInResources) {
  const Dataset ds = random_dataset(20, 4, 5);
  const LinearClassifier c{vec({0.4, -1, 2, 0.1}), 0.0};
  for (auto f : {NoiseFamily::InverseResource, NoiseFamily::InverseSqrtResource, NoiseFamily::QuantizationExp}) {
    const auto nm = NoiseModel::of_family(f);
    auto loss = [&](const Vector& r) { return square_loss_total(ds, c, ResourceVector(r, 5.0), nm).total; };
    Engine eng(9);
    const auto rep = verify_convexity(loss, simplex_segments(4, 5.0, 1e-3), 10000, eng);
    EXPECT_EQ(rep.violations, 0u) << to_string(f);
  }
}

TEST(GaussianHinge, Examples) {
  EXPECT_EQ(gaussian_hinge_expected(2.0, 0.0), 0.0);
  EXPECT_NEAR(gaussian_hinge_expected(1.0, 1.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(gaussian_hinge_expected(0.0, 1e-12), 1.0, 1e-12);
}

TEST(GaussianHinge, ConvexNonincreasingInMargin) {
  for (double s : {0.1, 0.5, 2.0}) {
    const double h = 1e-2;
    for (double m = -3.0; m < 4.0; m += 0.05) {
      const double a = gaussian_hinge_expected(m - h, s);
      const double b = gaussian_hinge_expected(m, s);
      const double c = gaussian_hinge_expected(m + h, s);
      EXPECT_LE(c, b + 1e-15);
      EXPECT_GE(a + c - 2 * b, -1e-13);
    }
  }
}

TEST(GaussianHinge, IncreasingInSigma) {
  for (double m : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
    double prev = gaussian_hinge_expected(m, 0.01);
    for (double s = 0.02; s < 3.0; s += 0.01) {
      const double cur = gaussian_hinge_expected(m, s);
      EXPECT_GE(cur, prev - 1e-15);
      prev = cur;
    }
  }
}

TEST(GaussianHinge, MonteCarloSingleSample) {
  Dataset ds;
  ds.features = Matrix::Zero(1, 1);
  ds.labels = Vector::Ones(1);
  Engine eng(13);
  const LinearClassifier c{vec({1.0}), 1.0};
  const auto mc = oracle::mc_expected_loss(ds, c, ResourceVector(vec({1.0}), 1.0), NoiseModel::inverse_sqrt(),
                                           oracle::LossKind::Hinge, 10000000, eng);
  EXPECT_NEAR(mc.mean, 0.3989, 1e-3);
  EXPECT_NEAR(mc.mean, hinge_loss_expected(ds, c, ResourceVector(vec({1.0}), 1.0), NoiseModel::inverse_sqrt()), 1e-3);
}

TEST(RobustHinge, ZeroClassifier) {
  const Dataset ds = random_dataset(17, 2, 6);
  EXPECT_DOUBLE_EQ(robust_hinge_objective(ds, LinearClassifier::zeros(2), vec({0.5, 0.5})), 17.0);
}

TEST(RobustHinge, ZeroSlackLeavesSupportTerm) {
  Dataset ds;
  ds.features.resize(2, 1);
  ds.features << 5.0, -5.0;
  ds.labels = vec({1, -1});
  const LinearClassifier c{vec({1.0}), 0.0};
  const Vector s = vec({0.5});
  EXPECT_DOUBLE_EQ(hinge_sum(ds, c), 0.0);
  EXPECT_DOUBLE_EQ(robust_hinge_objective(ds, c, s), ellipsoid_support(c.weights, s));
}

TEST(RobustHinge, SupportTermMatchesSampledSup) {
  Engine eng(17);
  const Vector w = vec({1.0, -2.0, 0.5});
  const Vector s = vec({0.3, 1.2, 2.0});
  const double sup = oracle::mc_ellipsoid_sup(w, s, 1000000, eng);
  EXPECT_NEAR(sup, ellipsoid_support(w, s), 5e-3 * ellipsoid_support(w, s));
  EXPECT_LE(sup, ellipsoid_support(w, s) * (1 + 1e-12));
}

TEST(RobustHinge, ConvexInClassifier) {
  const Dataset ds = random_dataset(30, 3, 7);
  const Vector s = vec({0.4, 0.1, 1.0});
  auto f = [&](const Vector& th) { return robust_hinge_objective(ds, {th.head(3), th[3]}, s); };
  SegmentSampler seg = [](Engine& eng) {
    std::normal_distribution<double> g(0.0, 2.0);
    Vector a(4), b(4);
    for (auto& x : a) x = g(eng);
    for (auto& x : b) x = g(eng);
    return std::make_pair(a, b);
  };
  Engine eng(3);
  EXPECT_EQ(verify_convexity(f, seg, 5000, eng).violations, 0u);
}

TEST(RobustHinge, SubgradientIsDescentDirection) {
  const Dataset ds = random_dataset(30, 3, 8);
  const Vector s = vec({0.4, 0.1, 1.0});
  Engine eng(4);
  std::normal_distribution<double> g;
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    LinearClassifier c{Vector(3), g(eng)};
    for (auto& x : c.weights) x = g(eng);
    const Vector sub = robust_hinge_subgradient(ds, c, s);
    const double f0 = robust_hinge_objective(ds, c, s);
    const double h = 1e-7;
    LinearClassifier moved{c.weights - h * sub.head(3), c.bias - h * sub[3]};
    // only smooth points: no margin within the step of the kink
    bool smooth = true;
    for (Eigen::Index i = 0; i < 30; ++i)
      smooth = smooth && std::abs(1.0 - ds.labels[i] * c.decision(ds.features.row(i))) > 1e-4;
    if (!smooth) continue;
    ++checked;
    EXPECT_LT(robust_hinge_objective(ds, moved, s), f0);
    const double fd = (robust_hinge_objective(ds, moved, s) - f0) / h;
    EXPECT_NEAR(fd, -sub.squaredNorm(), 1e-5 * std::max(1.0, sub.squaredNorm()));
  }
  EXPECT_GT(checked, 10);
}

TEST(ErrorRate, CountsMisclassifications) {
  Dataset ds;
  ds.features.resize(4, 1);
  ds.features << 1, 2, -1, 0;
  ds.labels = vec({1, -1, -1, 1});
  EXPECT_DOUBLE_EQ(error_rate(ds, {vec({1.0}), 0.0}), 0.25);
}

TEST(MonteCarlo, SquareLossAgrees) {
  const Dataset ds = random_dataset(30, 3, 10);
  const LinearClassifier c{vec({0.5, -1.0, 2.0}), 0.1};
  const ResourceVector r(vec({0.5, 1.0, 2.5}), 4.0);
  Engine eng(77);
  const auto nm = NoiseModel::inverse_sqrt();
  const auto mc = oracle::mc_expected_loss(ds, c, r, nm, oracle::LossKind::Square, 100000, eng);
  EXPECT_LE(std::abs(mc.mean - square_loss_total(ds, c, r, nm).total), 4 * mc.stderr_);
  const auto mh = oracle::mc_expected_loss(ds, c, r, nm, oracle::LossKind::Hinge, 100000, eng);
  EXPECT_LE(std::abs(mh.mean - hinge_loss_expected(ds, c, r, nm)), 4 * mh.stderr_);
}
