#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rcc/online.hpp"
#include "rcc/oracle.hpp"

using namespace rcc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Noiseless oracle over a fixed linear model.
class CleanOracle final : public SampleOracle {
 public:
  CleanOracle(Vector w, std::uint64_t seed) : w_(std::move(w)), eng_(seed) {}
  void next_round() override {
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(w_.size())));
    x_.resize(w_.size());
    for (auto& v : x_) v = g(eng_);
  }
  Measurement measure(const Vector&) override { return {x_, x_, w_.dot(x_)}; }
  AcquisitionMode mode() const override { return AcquisitionMode::SharedSample; }

 private:
  Vector w_;
  Engine eng_;
  Vector x_;
};

OnlineConfig config(double cap, double budget, long long horizon, std::size_t d) {
  OnlineConfig c;
  c.weight_cap = cap;
  c.budget = budget;
  c.horizon = horizon;
  c.dims = d;
  return c;
}

}  // namespace

TEST(Projection, L2Examples) {
  const Vector p = project_l2_ball(vec({3, 4}), 1.0);
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.8, 1e-15);
  EXPECT_TRUE(project_l2_ball(vec({0.1, 0.2}), 1.0) == vec({0.1, 0.2}));
}

TEST(Projection, L1InsideUnchanged) { EXPECT_TRUE(project_l1_ball(vec({0.1, -0.2}), 1.0) == vec({0.1, -0.2})); }

TEST(Projection, L1MatchesQpOracle) {
  Engine eng(3);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int k = 0; k < 300; ++k) {
    Vector v(6);
    for (auto& x : v) x = g(eng);
    const Vector a = project_l1_ball(v, 1.5);
    const Vector b = oracle::qp_project_l1(v, 1.5);
    EXPECT_LT((a - b).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

TEST(Alg1, FirstRoundKeepsUniformAllocation) {
  GaussianNoiseOracle orc(linear_gaussian_sampler(vec({1, 2, 3})), NoiseModel::inverse_sqrt(),
                          AcquisitionMode::FreshNoise, RngConfig{1});
  auto cfg = config(5.0, 3.0, 1, 3);
  const auto tr = alg1_run(orc, cfg);
  ASSERT_EQ(tr.rounds.size(), 1u);
  EXPECT_TRUE(tr.final_r.isApprox(Vector::Constant(3, 1.0), 1e-15));
  EXPECT_GT(tr.final_w.norm(), 0.0);
}

TEST(Alg1, NoiselessLossDecreases) {
  CleanOracle orc(vec({0.5, -0.3, 0.2}), 4);
  auto cfg = config(2.0, 3.0, 3000, 3);
  cfg.eta = [](long long) { return 0.5; };
  const auto tr = alg1_run(orc, cfg);
  double prev = 1e300;
  int increases = 0;
  for (std::size_t s = 0; s + 100 <= tr.rounds.size(); s += 300) {
    double avg = 0;
    for (std::size_t t = s; t < s + 100; ++t) avg += tr.rounds[t].loss;
    if (avg > prev) ++increases;
    prev = avg;
  }
  EXPECT_EQ(increases, 0);
}

TEST(Alg1, FeasibleEveryRound) {
  GaussianNoiseOracle orc(linear_gaussian_sampler(vec({1, 7, 1}), 0.0, 1.0, 2.0), NoiseModel::inverse_sqrt(),
                          AcquisitionMode::Correlated, RngConfig{2});
  auto cfg = config(10.0, 18.0, 5000, 3);
  cfg.epsilon = 0.2;
  const auto tr = alg1_run(orc, cfg);
  ASSERT_FALSE(tr.aborted);
  for (const auto& r : tr.rounds) {
    EXPECT_LE(r.w_norm, 10.0 * (1 + 1e-12));
    EXPECT_NEAR(r.r.sum(), 18.0, 1e-9);
    EXPECT_GE(r.r.minCoeff(), cfg.floor() * (1 - 1e-12));
  }
}

TEST(Alg1, StepScheduleIsInverseSqrt) {
  // One round from w = 0: w_2 = eta_1 * y * x with eta_1 = 1.
  CleanOracle orc(vec({1.0, 0.0}), 5);
  auto cfg = config(100.0, 2.0, 1, 2);
  const auto tr = alg1_run(orc, cfg);
  CleanOracle again(vec({1.0, 0.0}), 5);
  again.next_round();
  const auto m = again.measure(Vector::Ones(2));
  EXPECT_TRUE(tr.final_w.isApprox(m.label * m.noisy, 1e-15));
}

TEST(Alg1, OracleFailureAbortsWithPartialTrace) {
  class Failing final : public SampleOracle {
   public:
    void next_round() override {
      if (++n_ > 3) fail(ErrorKind::OracleFailure, "sensor offline");
    }
    Measurement measure(const Vector& r) override { return {Vector::Zero(r.size()), Vector::Zero(r.size()), 0.0}; }
    AcquisitionMode mode() const override { return AcquisitionMode::FreshNoise; }

   private:
    int n_ = 0;
  } orc;
  const auto tr = alg1_run(orc, config(1.0, 2.0, 10, 2));
  EXPECT_TRUE(tr.aborted);
  EXPECT_EQ(tr.rounds.size(), 3u);
  EXPECT_NE(tr.abort_reason.find("sensor offline"), std::string::npos);
}

TEST(Alg1Bound, PlugIn) {
  auto cfg = config(4.0, 3.0, 1, 1);
  cfg.epsilon = 0.5;
  BoundParams p;
  p.bx4 = 1;
  p.bx2 = 1;
  p.bdelta2 = 1;
  p.bdelta4 = 1;
  cfg.bound_params = p;
  // B = 10, Bx~4 = 8, Bx~2 = 2, grad^2 = 2*16*8 + 2*2 + 2*8*256/0.25
  const double grad2 = 256.0 + 4.0 + 2.0 * 8.0 * 256.0 / 0.25;
  EXPECT_NEAR(alg1_bound(cfg, 1), 10.0 / 2.0 + 0.5 * grad2, 1e-9);
  EXPECT_NEAR(alg1_bound(cfg, 4, Alg1BoundVariant::SharedSample),
              10.0 + 1.5 * (256.0 + 4.0 + 2.0 * 256.0 / 0.25), 1e-9);
  cfg.bound_params->bgrad = 3.0;
  EXPECT_NEAR(alg1_bound(cfg, 4, Alg1BoundVariant::BoundedGrad), 10.0 + 1.5 * (256.0 + 4.0 + 2.0 * 256.0 * 9.0),
              1e-9);
}

TEST(Alg1Bound, Monotone) {
  auto cfg = config(2.0, 3.0, 1, 1);
  cfg.bound_params = BoundParams{1.5, 1.0, 0.3, 0.4, std::nullopt};
  double prev = 0;
  for (long long t = 1; t < 100000; t *= 3) {
    const double b = alg1_bound(cfg, t);
    EXPECT_GT(b, prev);
    prev = b;
  }
  cfg.epsilon = 0.1;
  const double small = alg1_bound(cfg, 100);
  cfg.epsilon = 0.2;
  EXPECT_LT(alg1_bound(cfg, 100), small);
}

TEST(Alg1, KieferWolfowitzUnbiased) {
  const auto nm = NoiseModel::inverse_sqrt();
  const Vector r = vec({0.5, 2.0});
  const double eps = 0.1;
  for (auto mode : {AcquisitionMode::FreshNoise, AcquisitionMode::SharedSample, AcquisitionMode::Correlated}) {
    GaussianNoiseOracle orc(linear_gaussian_sampler(vec({1, 1})), nm, mode, RngConfig{8});
    const int n = 100000;
    Vector sum = Vector::Zero(2), sum2 = Vector::Zero(2);
    for (int k = 0; k < n; ++k) {
      orc.next_round();
      const auto a = orc.measure(r);
      const auto b = orc.measure((r.array() + eps).matrix());
      const Vector g = ((b.noisy.array().square() - a.noisy.array().square()) / eps).matrix();
      sum += g;
      sum2 += g.cwiseProduct(g);
    }
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double mean = sum[i] / n;
      const double se = std::sqrt((sum2[i] / n - mean * mean) / n);
      const double truth = (nm.variance(i, r[i] + eps) - nm.variance(i, r[i])) / eps;
      EXPECT_LE(std::abs(mean - truth), 3 * se) << "mode " << static_cast<int>(mode) << " feature " << i;
    }
  }
}

TEST(Oracle, CorrelatedModeRescalesNoise) {
  const auto nm = NoiseModel::inverse_sqrt();
  GaussianNoiseOracle orc(linear_gaussian_sampler(vec({1, 1})), nm, AcquisitionMode::Correlated, RngConfig{9});
  orc.next_round();
  const auto a = orc.measure(vec({1, 4}));
  const auto b = orc.measure(vec({4, 4}));
  EXPECT_NEAR(b.noisy[0] - b.clean[0], 0.5 * (a.noisy[0] - a.clean[0]), 1e-14);
  EXPECT_NEAR(b.noisy[1] - b.clean[1], a.noisy[1] - a.clean[1], 1e-14);
}

TEST(Oracle, ZeroAllocationFails) {
  GaussianNoiseOracle orc(linear_gaussian_sampler(vec({1, 1})), NoiseModel::inverse(), AcquisitionMode::FreshNoise,
                          RngConfig{1});
  orc.next_round();
  EXPECT_THROW(orc.measure(vec({0, 1})), Error);
}

TEST(Alg2, ZeroWeightsGiveUniformAllocation) {
  const Vector r = efficient_rule(Vector::Zero(4), 8.0);
  EXPECT_TRUE(r.isApprox(Vector::Constant(4, 2.0)));
  const Vector e = efficient_rule(vec({1, -3}), 4.0);
  EXPECT_NEAR(e[0], 1.0 + 0.5, 1e-15);
  EXPECT_NEAR(e[1], 1.0 + 1.5, 1e-15);
}

TEST(Alg2, NoiselessSublinear) {
  CleanOracle orc(vec({0.5, -0.5, 0.2}), 11);
  auto cfg = config(2.0, 3.0, 20000, 3);
  const auto tr = alg2_run(orc, cfg, AllocationRule::Uniform,
                          NoiseModel::inverse_sqrt({1e-6, 1e-6, 1e-6}));
  double first = 0, last = 0;
  for (std::size_t t = 0; t < 2000; ++t) first += tr.rounds[t].clean_loss;
  for (std::size_t t = tr.rounds.size() - 2000; t < tr.rounds.size(); ++t) last += tr.rounds[t].clean_loss;
  EXPECT_LT(last, 0.1 * first);
}

TEST(Alg2, FeasibleAndConstantStep) {
  GaussianNoiseOracle orc(linear_gaussian_sampler(vec({3, 0, 0, 0})), NoiseModel::inverse_sqrt(),
                          AcquisitionMode::FreshNoise, RngConfig{12});
  auto cfg = config(5.0, 8.0, 2000, 4);
  const auto tr = alg2_run(orc, cfg, AllocationRule::Efficient, NoiseModel::inverse_sqrt());
  for (const auto& r : tr.rounds) {
    EXPECT_LE(r.w_norm, 5.0 * (1 + 1e-12));
    EXPECT_NEAR(r.r.sum(), 8.0, 1e-9);
  }
}

TEST(Alg2, CustomRuleRequiresFunction) {
  GaussianNoiseOracle orc(linear_gaussian_sampler(vec({1, 1})), NoiseModel::inverse(), AcquisitionMode::FreshNoise,
                          RngConfig{1});
  EXPECT_THROW(alg2_run(orc, config(1, 1, 10, 2), AllocationRule::Custom, NoiseModel::inverse()), Error);
}

TEST(Alg2Bounds, UniformPlugIn) {
  auto cfg = config(1.0, 2.0, 4, 2);
  const auto b = alg2_bounds(cfg, 2, 1.0, AllocationRule::Uniform);
  EXPECT_NEAR(b.g, 338.0, 1e-12);
  EXPECT_NEAR(b.regret, 339.0 * 1.0 * 2.0 / 2.0, 1e-12);
}

TEST(Alg2Bounds, EfficientGrowsSlowerInDimension) {
  auto cfg = config(1.0, 10.0, 100, 1);
  double prev = 0;
  for (std::size_t d : {100, 200, 400, 800}) {
    const double ratio = alg2_bounds(cfg, d, 1.0, AllocationRule::Uniform).g /
                         alg2_bounds(cfg, d, 1.0, AllocationRule::Efficient).g;
    EXPECT_GT(ratio, prev);
    prev = ratio;
  }
  EXPECT_GT(prev, 5.0);
  const auto u1 = alg2_bounds(cfg, 1, 1.0, AllocationRule::Uniform);
  const auto e1 = alg2_bounds(cfg, 1, 1.0, AllocationRule::Efficient);
  EXPECT_TRUE(std::isfinite(u1.g) && std::isfinite(e1.g));
}

TEST(OnlineConfig, Validation) {
  auto cfg = config(1.0, 1.0, 10, 2);
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.epsilon = 0.1;
  cfg.resource_floor = 0.6;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Recording, MomentsAndStream) {
  GaussianNoiseOracle inner(linear_gaussian_sampler(vec({1, 2}), 0.0, 1.0, 1.0), NoiseModel::inverse_sqrt(),
                            AcquisitionMode::Correlated, RngConfig{4});
  RecordingOracle rec(inner, true);
  for (int k = 0; k < 20000; ++k) {
    rec.next_round();
    rec.measure(vec({1, 1}));
    rec.measure(vec({1.5, 1.5}));
  }
  EXPECT_NEAR(rec.mean_x2(), 2.0, 0.05);
  EXPECT_NEAR(rec.mean_x4(), 8.0, 0.4);
  EXPECT_GT(rec.max_delta2_change(), 0.0);
  const Dataset ds = rec.clean_stream();
  EXPECT_EQ(ds.samples(), 20000u);
  EXPECT_NEAR(ds.labels[5], ds.features.row(5).dot(vec({1, 2})), 1e-12);
}
