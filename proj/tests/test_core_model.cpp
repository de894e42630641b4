#include <gtest/gtest.h>

#include <cmath>

#include "rcc/core_model.hpp"

using namespace rcc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

ResourceVector rv(std::initializer_list<double> v, double budget) { return ResourceVector(vec(v), budget); }

}  // namespace

TEST(SigmaAggregate, ZeroClassifier) {
  EXPECT_EQ(sigma_aggregate(LinearClassifier::zeros(2), rv({1, 1}, 2), NoiseModel::inverse_sqrt()), 0.0);
}

TEST(SigmaAggregate, DirectEvaluation) {
  const auto nm = NoiseModel::inverse_sqrt();
  EXPECT_NEAR(sigma_aggregate({vec({1, 1}), 0.0}, rv({1, 1}, 2), nm), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(sigma_aggregate({vec({1, 7, 1}), 0.0}, rv({1, 7, 1}, 9), nm), 3.0, 1e-14);
}

TEST(SigmaAggregate, HomogeneousPerCoordinate) {
  const auto nm = NoiseModel::inverse();
  const ResourceVector r = rv({0.5, 2.5}, 3);
  const double s1 = sigma_aggregate({vec({1.3, 0}), 0.0}, r, nm);
  const double s2 = sigma_aggregate({vec({2.6, 0}), 0.0}, r, nm);
  EXPECT_NEAR(s2, 2.0 * s1, 1e-14);
}

TEST(SigmaAggregate, BelowFloorWithWeightThrows) {
  const auto nm = NoiseModel::inverse_sqrt();
  try {
    sigma_aggregate({vec({1, 1}), 0.0}, rv({2, 0}, 2), nm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleAllocation);
  }
  EXPECT_NEAR(sigma_aggregate({vec({1, 0}), 0.0}, rv({2, 0}, 2), nm), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ResourceVector, RejectsOverBudgetAndNegative) {
  EXPECT_THROW(rv({1, 2}, 2), Error);
  EXPECT_THROW(rv({-0.1, 1}, 2), Error);
  EXPECT_NO_THROW(rv({1, 1}, 2));
}

TEST(NoiseModel, BuiltInFamiliesDecreasingAndConvex) {
  for (auto f : {NoiseFamily::InverseResource, NoiseFamily::InverseSqrtResource, NoiseFamily::QuantizationExp}) {
    const auto nm = NoiseModel::of_family(f, {0.7});
    for (double r = 0.01; r < 20.0; r *= 1.3) {
      const double h = 0.1 * r;
      EXPECT_LT(nm.sigma(0, r + h), nm.sigma(0, r)) << to_string(f);
      const double r2 = 1.7 * r + 0.3;
      EXPECT_LE(nm.sigma(0, 0.5 * (r + r2)), 0.5 * (nm.sigma(0, r) + nm.sigma(0, r2)) + 1e-15) << to_string(f);
    }
  }
}

TEST(NoiseModel, DerivativeMatchesDifferences) {
  for (auto f : {NoiseFamily::InverseResource, NoiseFamily::InverseSqrtResource, NoiseFamily::QuantizationExp}) {
    const auto nm = NoiseModel::of_family(f, {1.5});
    for (double r : {0.3, 1.0, 4.0}) {
      const double h = 1e-5;
      const double fd = (nm.sigma(0, r + h) - nm.sigma(0, r - h)) / (2 * h);
      EXPECT_NEAR(nm.dsigma(0, r), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(NoiseModel, ZeroAllocationIsInfinite) {
  EXPECT_TRUE(std::isinf(NoiseModel::inverse_sqrt().sigma(0, 0.0)));
}

TEST(NoiseModel, TabulatedValidation) {
  EXPECT_THROW(NoiseModel::tabulated({{{1, 1}, {2, 1}}}), Error);
  EXPECT_THROW(NoiseModel::tabulated({{{1, 2}, {-1, 1}}}), Error);
  const auto up = NoiseModel::tabulated({{{1, 2, 3}, {1, 2, 3}}});
  EXPECT_FALSE(up.is_strictly_decreasing());
  const auto down = NoiseModel::tabulated({{{1, 2, 4}, {4, 2, 1}}});
  EXPECT_TRUE(down.is_strictly_decreasing());
  EXPECT_NEAR(down.sigma(0, 3.0), 1.5, 1e-15);
  EXPECT_NEAR(down.sigma(0, 8.0), 0.5, 1e-15);
}

TEST(NoiseModel, FloorDefaultsToBudgetFraction) {
  auto nm = NoiseModel::inverse_sqrt();
  EXPECT_DOUBLE_EQ(nm.floor(5.0), 5e-9);
  nm.with_absolute_floor(0.01);
  EXPECT_DOUBLE_EQ(nm.floor(5.0), 0.01);
}

TEST(Synthetic, LabelExamples) {
  EXPECT_EQ(synthetic_label(0.1, 0.1, 0.9, 7.0), 1.0);
  EXPECT_EQ(synthetic_label(0.5, 0.5, 1.0, 1.0), 1.0);
  EXPECT_EQ(synthetic_label(0.5, 0.5, 0.9, 1.0), -1.0);
}

TEST(Synthetic, ClassBalance) {
  const Dataset ds = generate_synthetic(7.0, 240000, 0.0, RngConfig{3});
  const double pos = (ds.labels.array() > 0).cast<double>().mean();
  EXPECT_GT(pos, 0.45);
  EXPECT_LT(pos, 0.55);
}

TEST(Synthetic, Reproducible) {
  const Dataset a = generate_synthetic(7.0, 500, 0.05, RngConfig{11});
  const Dataset b = generate_synthetic(7.0, 500, 0.05, RngConfig{11});
  EXPECT_TRUE(a.features == b.features);
  EXPECT_TRUE(a.labels == b.labels);
  const Dataset c = generate_synthetic(7.0, 500, 0.05, RngConfig{12});
  EXPECT_FALSE(a.features == c.features);
}

TEST(InjectNoise, ZeroScaleIsIdentity) {
  const Dataset ds = generate_synthetic(2.0, 100, 0.0, RngConfig{1});
  const Dataset out = inject_noise(ds, ResourceVector::uniform(3, 3), NoiseModel::inverse_sqrt(), 0.0, RngConfig{2});
  EXPECT_TRUE(out.features == ds.features);
}

TEST(InjectNoise, LargeResourceVanishes) {
  Dataset ds;
  ds.features = Matrix::Zero(2000, 2);
  ds.labels = Vector::Ones(2000);
  const Dataset out = inject_noise(ds, rv({1e12, 1e12}, 2e12), NoiseModel::inverse_sqrt(), 1.0, RngConfig{2});
  EXPECT_LT(out.features.cwiseAbs().maxCoeff(), 1e-4);
}

TEST(InjectNoise, EmpiricalSd) {
  Dataset ds;
  ds.features = Matrix::Zero(100000, 3);
  ds.labels = Vector::Ones(100000);
  const Dataset out = inject_noise(ds, rv({1, 1, 1}, 3), NoiseModel::inverse_sqrt(), 1.0, RngConfig{5});
  for (Eigen::Index j = 0; j < 3; ++j) {
    const auto col = out.features.col(j).array();
    const double sd = std::sqrt((col - col.mean()).square().sum() / (col.size() - 1));
    EXPECT_NEAR(sd, 1.0, 0.02);
  }
}

TEST(InjectNoise, ReproducibleBitForBit) {
  const Dataset ds = generate_synthetic(7.0, 300, 0.0, RngConfig{1});
  const auto r = rv({1, 2, 3}, 6);
  const Dataset a = inject_noise(ds, r, NoiseModel::inverse(), 0.5, RngConfig{9});
  const Dataset b = inject_noise(ds, r, NoiseModel::inverse(), 0.5, RngConfig{9});
  EXPECT_TRUE(a.features == b.features);
}

TEST(FeasibleSet, DiameterAndMembership) {
  FeasibleSet fs{3.0, 4.0, CapNorm::L2, 0.0};
  EXPECT_DOUBLE_EQ(fs.diameter(), 10.0);
  EXPECT_TRUE(fs.contains(vec({0, 4}), vec({1, 2})));
  EXPECT_FALSE(fs.contains(vec({3, 4}), vec({1, 2})));
  EXPECT_FALSE(fs.contains(vec({0, 1}), vec({1, 1})));
}

TEST(Rng, StreamsIndependentAndStable) {
  const RngConfig c{42};
  auto a = c.stream("data");
  auto b = c.stream("data");
  auto n = c.stream("noise");
  EXPECT_EQ(a(), b());
  EXPECT_NE(c.stream("data")(), n());
  EXPECT_NE(c.child("x", 0).seed, c.child("x", 1).seed);
}
