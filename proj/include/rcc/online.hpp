#pragma once

// Online learning of a classifier together with its acquisition resources.
//
//  * alg1_run: the disturbance is unknown. Each round acquires the same
//    label twice, at r and at r + eps, and uses the difference of squared
//    measurements as a Kiefer-Wolfowitz estimate of d sigma_i^2 / d r_i.
//  * alg2_run: training data are noisy with a known diagonal covariance;
//    the next allocation is a function of the current classifier.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rcc/allocation.hpp"
#include "rcc/core_model.hpp"

namespace rcc {

//------------------------------------------------------------------------------
// Projections
//------------------------------------------------------------------------------

inline Vector project_l2_ball(const Vector& v, double radius) {
  require(radius > 0.0, ErrorKind::Argument, "ball radius must be positive");
  const double n = v.norm();
  if (n <= radius) return v;
  return v * (radius / n);
}

/// Exact Euclidean projection onto {u : |u|_1 <= radius} by sorted
/// soft-thresholding.
inline Vector project_l1_ball(const Vector& v, double radius) {
  require(radius > 0.0, ErrorKind::Argument, "ball radius must be positive");
  if (v.lpNorm<1>() <= radius) return v;
  std::vector<double> a(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(v[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    cumsum += a[j];
    const double t = (cumsum - radius) / static_cast<double>(j + 1);
    if (a[j] - t > 0.0) tau = t;
  }
  Vector u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double m = std::max(std::abs(v[i]) - tau, 0.0);
    u[i] = v[i] < 0.0 ? -m : m;
  }
  return u;
}

//------------------------------------------------------------------------------
// Sample oracles
//------------------------------------------------------------------------------

enum class AcquisitionMode {
  FreshNoise,    ///< every acquisition draws a new clean sample
  SharedSample,  ///< acquisitions within a round share the clean sample, noise independent
  Correlated,    ///< shared clean sample; noise at r + eps is a rescaled copy of the noise at r
};

struct Measurement {
  Vector noisy;  ///< what the learner sees
  Vector clean;  ///< ground truth, for evaluation only
  double label = 0.0;
};

/// Supplies noisy measurements for the current round. next_round() starts a
/// round; measure() may be called several times within it.
class SampleOracle {
 public:
  virtual ~SampleOracle() = default;
  virtual void next_round() = 0;
  virtual Measurement measure(const Vector& r) = 0;
  virtual AcquisitionMode mode() const = 0;
};

using CleanSampler = std::function<std::pair<Vector, double>(Engine&)>;

/// Gaussian measurement noise with sd scale * sigma_i(r_i) on top of clean
/// samples drawn from a user sampler.
class GaussianNoiseOracle final : public SampleOracle {
 public:
  GaussianNoiseOracle(CleanSampler sampler, NoiseModel nm, AcquisitionMode mode, const RngConfig& rng,
                      double scale = 1.0)
      : sampler_(std::move(sampler)),
        nm_(std::move(nm)),
        mode_(mode),
        data_eng_(rng.stream(kDataStream)),
        noise_eng_(rng.stream(kNoiseStream)),
        scale_(scale) {}

  void next_round() override {
    auto [x, y] = sampler_(data_eng_);
    clean_ = std::move(x);
    label_ = y;
    first_noise_.reset();
    first_sd_.resize(0);
  }

  Measurement measure(const Vector& r) override {
    require(clean_.size() > 0, ErrorKind::OracleFailure, "measure() called before next_round()");
    require(r.size() == clean_.size(), ErrorKind::OracleFailure, "resource vector dimension mismatch");
    const bool first = !first_noise_.has_value();
    if (!first && mode_ == AcquisitionMode::FreshNoise) {
      auto [x, y] = sampler_(data_eng_);
      (void)y;
      clean_ = std::move(x);
    }
    Vector sd(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      sd[i] = scale_ * nm_.sigma(static_cast<std::size_t>(i), r[i]);
      require(std::isfinite(sd[i]), ErrorKind::OracleFailure, "noise undefined at zero allocation");
    }
    Vector z(r.size());
    if (!first && mode_ == AcquisitionMode::Correlated) {
      z = *first_noise_;
    } else {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss_(noise_eng_);
    }
    if (first) {
      first_noise_ = z;
      first_sd_ = sd;
    }
    Measurement m;
    m.clean = clean_;
    m.noisy = clean_ + (z.array() * sd.array()).matrix();
    m.label = label_;
    return m;
  }

  AcquisitionMode mode() const override { return mode_; }

 private:
  CleanSampler sampler_;
  NoiseModel nm_;
  AcquisitionMode mode_;
  Engine data_eng_;
  Engine noise_eng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  double scale_;
  Vector clean_;
  double label_ = 0.0;
  std::optional<Vector> first_noise_;
  Vector first_sd_;
};

/// Gaussian clean samples x ~ N(0, feature_sd^2 I) with
/// y = w*^T x / norm + N(0, label_sd^2). feature_sd <= 0 selects 1/sqrt(d),
/// so that E|x|^2 = 1.
inline CleanSampler linear_gaussian_sampler(Vector w_true, double label_sd = 0.0, double y_norm = 1.0,
                                            double feature_sd = 0.0) {
  const double s = feature_sd > 0.0 ? feature_sd : 1.0 / std::sqrt(static_cast<double>(w_true.size()));
  return [w = std::move(w_true), label_sd, y_norm, s](Engine& eng) {
    std::normal_distribution<double> g(0.0, 1.0);
    const auto d = w.size();
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = s * g(eng);
    double y = w.dot(x) / y_norm;
    if (label_sd > 0.0) y += label_sd * g(eng);
    return std::make_pair(std::move(x), y);
  };
}

/// Pass-through oracle that records clean-sample moments, the largest change
/// of squared noise between acquisitions of one round, and optionally the
/// clean stream (first acquisition of each round).
class RecordingOracle final : public SampleOracle {
 public:
  explicit RecordingOracle(SampleOracle& inner, bool keep_stream = false) : inner_(inner), keep_(keep_stream) {}

  void next_round() override {
    inner_.next_round();
    first_.reset();
  }

  Measurement measure(const Vector& r) override {
    Measurement m = inner_.measure(r);
    const Vector delta2 = (m.noisy - m.clean).array().square().matrix();
    if (!first_) {
      first_ = delta2;
      const double n2 = m.clean.squaredNorm();
      ++rounds_;
      sum_x2_ += n2;
      sum_x4_ += n2 * n2;
      if (keep_) {
        clean_.push_back(m.clean);
        labels_.push_back(m.label);
      }
    } else {
      max_delta2_change_ = std::max(max_delta2_change_, (delta2 - *first_).cwiseAbs().maxCoeff());
    }
    return m;
  }

  AcquisitionMode mode() const override { return inner_.mode(); }

  long long rounds() const { return rounds_; }
  double mean_x2() const { return rounds_ ? sum_x2_ / static_cast<double>(rounds_) : 0.0; }
  double mean_x4() const { return rounds_ ? sum_x4_ / static_cast<double>(rounds_) : 0.0; }
  /// max over rounds and features of |delta_2^2 - delta_1^2|
  double max_delta2_change() const { return max_delta2_change_; }

  Dataset clean_stream() const {
    require(keep_, ErrorKind::Config, "clean stream was not recorded");
    Dataset ds;
    if (clean_.empty()) return ds;
    ds.features.resize(static_cast<Eigen::Index>(clean_.size()), clean_.front().size());
    ds.labels.resize(static_cast<Eigen::Index>(clean_.size()));
    for (std::size_t k = 0; k < clean_.size(); ++k) {
      ds.features.row(static_cast<Eigen::Index>(k)) = clean_[k].transpose();
      ds.labels[static_cast<Eigen::Index>(k)] = labels_[k];
    }
    return ds;
  }

 private:
  SampleOracle& inner_;
  bool keep_;
  std::optional<Vector> first_;
  long long rounds_ = 0;
  double sum_x2_ = 0.0;
  double sum_x4_ = 0.0;
  double max_delta2_change_ = 0.0;
  std::vector<Vector> clean_;
  std::vector<double> labels_;
};

//------------------------------------------------------------------------------
// Configuration and traces
//------------------------------------------------------------------------------

enum class Alg1BoundVariant {
  Standard,      ///< independent acquisitions
  SharedSample,  ///< the same data point measured twice
  BoundedGrad,   ///< correlated acquisitions with a bounded gradient difference
};

struct BoundParams {
  double bx4 = 1.0;  ///< E|x|^4
  double bx2 = 1.0;  ///< E|x|^2
  double bdelta2 = 0.0;
  double bdelta4 = 0.0;
  std::optional<double> bgrad;
};

struct OnlineConfig {
  double weight_cap = 1.0;  // B_W
  double budget = 1.0;      // R
  double epsilon = 0.1;     // Kiefer-Wolfowitz probe
  long long horizon = 1000; // T
  /// Optional; alg1 uses 1/sqrt(t), alg2 uses weight_cap / sqrt(T).
  std::function<double(long long t)> eta;
  std::optional<BoundParams> bound_params;
  std::size_t dims = 1;
  /// Smallest allocation per feature; 0 selects 1e-9 * budget.
  double resource_floor = 0.0;

  double floor() const { return resource_floor > 0.0 ? resource_floor : 1e-9 * budget; }

  void validate() const {
    require(epsilon > 0.0, ErrorKind::Config, "Kiefer-Wolfowitz epsilon must be positive");
    require(weight_cap > 0.0, ErrorKind::Config, "weight cap must be positive");
    require(horizon >= 1, ErrorKind::Config, "horizon must be at least one round");
    require(dims >= 1, ErrorKind::Config, "dimension must be positive");
    require(resource_floor >= 0.0 && budget > static_cast<double>(dims) * floor(), ErrorKind::Config,
            "budget must exceed d * resource floor");
  }
};

struct RoundRecord {
  double loss = 0.0;        ///< loss the theory charges (first, budget-conformant measurement)
  double clean_loss = 0.0;  ///< same prediction against the clean sample
  double w_norm = 0.0;
  Vector r;
  double grad_norm = 0.0;
};

struct RegretTrace {
  std::vector<RoundRecord> rounds;
  double cumulative_loss = 0.0;
  double cumulative_clean_loss = 0.0;
  std::optional<double> comparator_loss;
  std::optional<double> bound;
  Vector final_w;
  Vector final_r;
  bool aborted = false;
  std::string abort_reason;

  std::optional<double> regret() const {
    if (!comparator_loss) return std::nullopt;
    return cumulative_loss - *comparator_loss;
  }
};

//------------------------------------------------------------------------------
// Joint learner under unknown disturbance
//------------------------------------------------------------------------------

/// Joint SGD over (w, r) with a Kiefer-Wolfowitz estimate of the variance
/// slope. The second probe adds eps to every coordinate and may exceed the
/// budget by d * eps; the budget is enforced on r^t itself.
inline RegretTrace alg1_run(SampleOracle& oracle, const OnlineConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(cfg.dims);
  Vector w = Vector::Zero(d);
  Vector r = Vector::Constant(d, cfg.budget / static_cast<double>(d));
  RegretTrace trace;
  trace.rounds.reserve(static_cast<std::size_t>(cfg.horizon));

  for (long long t = 1; t <= cfg.horizon; ++t) {
    Measurement m1;
    Measurement m2;
    try {
      oracle.next_round();
      m1 = oracle.measure(r);
      m2 = oracle.measure((r.array() + cfg.epsilon).matrix());
    } catch (const std::exception& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    }
    const double eta = cfg.eta ? cfg.eta(t) : 1.0 / std::sqrt(static_cast<double>(t));
    const double resid = w.dot(m1.noisy) - m1.label;
    const Vector gw = resid * m1.noisy;
    const Vector gr = (w.array().square() * (m2.noisy.array().square() - m1.noisy.array().square()) /
                       cfg.epsilon)
                          .matrix();

    RoundRecord rec;
    rec.loss = resid * resid;
    const double clean_resid = w.dot(m1.clean) - m1.label;
    rec.clean_loss = clean_resid * clean_resid;
    rec.w_norm = w.norm();
    rec.r = r;
    rec.grad_norm = std::sqrt(gw.squaredNorm() + gr.squaredNorm());
    trace.cumulative_loss += rec.loss;
    trace.cumulative_clean_loss += rec.clean_loss;
    trace.rounds.push_back(std::move(rec));

    w = project_l2_ball(w - eta * gw, cfg.weight_cap);
    r = project_simplex_values(r - eta * gr, cfg.budget, cfg.floor());
  }
  trace.final_w = w;
  trace.final_r = r;
  return trace;
}

/// Regret bound B sqrt(T)/2 + (sqrt(T) - 1/2) |grad l|^2 for alg1_run.
inline double alg1_bound(const OnlineConfig& cfg, long long horizon,
                         Alg1BoundVariant variant = Alg1BoundVariant::Standard) {
  require(cfg.bound_params.has_value(), ErrorKind::Config, "bound parameters are not set");
  require(cfg.epsilon > 0.0, ErrorKind::Config, "Kiefer-Wolfowitz epsilon must be positive");
  const BoundParams& p = *cfg.bound_params;
  const double bw = cfg.weight_cap;
  const double diam = 2.0 * std::sqrt(cfg.budget * cfg.budget + bw * bw);
  const double bxt4 = p.bx4 + 6.0 * p.bx2 * p.bdelta2 + p.bdelta4;
  const double bxt2 = p.bx2 + p.bdelta2;
  const double bw4 = bw * bw * bw * bw;
  double last = 0.0;
  switch (variant) {
    case Alg1BoundVariant::Standard: last = 2.0 * bxt4 * bw4 / (cfg.epsilon * cfg.epsilon); break;
    case Alg1BoundVariant::SharedSample: last = 2.0 * p.bdelta4 * bw4 / (cfg.epsilon * cfg.epsilon); break;
    case Alg1BoundVariant::BoundedGrad:
      require(p.bgrad.has_value(), ErrorKind::Config, "bounded-gradient variant needs B_grad");
      last = 2.0 * bw4 * (*p.bgrad) * (*p.bgrad);
      break;
  }
  const double grad2 = 2.0 * bw * bw * bxt4 + 2.0 * bxt2 + last;
  const double st = std::sqrt(static_cast<double>(horizon));
  return diam * st / 2.0 + (st - 0.5) * grad2;
}

//------------------------------------------------------------------------------
// Learner on noisy training data with resource feedback
//------------------------------------------------------------------------------

enum class AllocationRule { Uniform, Efficient, Custom };

using AllocationFn = std::function<Vector(const Vector& w)>;

/// r_i = R/(2d) + R |w_i| / (2 |w|_1); uniform when w = 0.
inline Vector efficient_rule(const Vector& w, double budget) {
  const auto d = static_cast<double>(w.size());
  const double l1 = w.lpNorm<1>();
  if (l1 == 0.0) return Vector::Constant(w.size(), budget / d);
  return (budget / (2.0 * d) + budget * w.array().abs() / (2.0 * l1)).matrix();
}

inline RegretTrace alg2_run(SampleOracle& oracle, const OnlineConfig& cfg, AllocationRule rule,
                            const NoiseModel& nm, const AllocationFn& custom = {}) {
  cfg.validate();
  require(rule != AllocationRule::Custom || static_cast<bool>(custom), ErrorKind::Config,
          "custom allocation rule needs a function");
  const auto d = static_cast<Eigen::Index>(cfg.dims);
  const double eta_const = cfg.weight_cap / std::sqrt(static_cast<double>(cfg.horizon));
  auto next_alloc = [&](const Vector& w) -> Vector {
    switch (rule) {
      case AllocationRule::Uniform: return Vector::Constant(d, cfg.budget / static_cast<double>(d));
      case AllocationRule::Efficient: return efficient_rule(w, cfg.budget);
      case AllocationRule::Custom: return custom(w);
    }
    return Vector::Constant(d, cfg.budget / static_cast<double>(d));
  };

  Vector w = Vector::Zero(d);
  Vector r = Vector::Constant(d, cfg.budget / static_cast<double>(d));
  RegretTrace trace;
  trace.rounds.reserve(static_cast<std::size_t>(cfg.horizon));

  for (long long t = 1; t <= cfg.horizon; ++t) {
    Measurement m;
    try {
      oracle.next_round();
      m = oracle.measure(r);
    } catch (const std::exception& e) {
      trace.aborted = true;
      trace.abort_reason = e.what();
      break;
    }
    const double eta = cfg.eta ? cfg.eta(t) : eta_const;
    Vector sigma2(d);
    for (Eigen::Index i = 0; i < d; ++i) sigma2[i] = nm.variance(static_cast<std::size_t>(i), r[i]);
    const double resid = w.dot(m.noisy) - m.label;
    const Vector grad = 2.0 * resid * m.noisy - (sigma2.array() * w.array()).matrix();

    RoundRecord rec;
    rec.loss = resid * resid;
    const double clean_resid = w.dot(m.clean) - m.label;
    rec.clean_loss = clean_resid * clean_resid;
    rec.w_norm = w.lpNorm<1>();
    rec.r = r;
    rec.grad_norm = grad.norm();
    trace.cumulative_loss += rec.loss;
    trace.cumulative_clean_loss += rec.clean_loss;
    trace.rounds.push_back(std::move(rec));

    w = project_l1_ball(w - eta * grad, cfg.weight_cap);
    r = next_alloc(w);
  }
  trace.final_w = w;
  trace.final_r = r;
  return trace;
}

struct Alg2Bound {
  double g = 0.0;
  double regret = 0.0;
};

/// Gradient-moment constant G and regret bound (G + 1) B_W sqrt(T) / 2 for
/// the uniform and the efficient allocation rules.
inline Alg2Bound alg2_bounds(const OnlineConfig& cfg, std::size_t dims, double bx4, AllocationRule rule) {
  require(rule != AllocationRule::Custom, ErrorKind::Config, "bounds exist for uniform and efficient rules only");
  const double d = static_cast<double>(dims);
  const double r = cfg.budget;
  const double b2 = cfg.weight_cap * cfg.weight_cap;
  double g = 0.0;
  if (rule == AllocationRule::Uniform) {
    g = 32.0 * b2 * d * d * d / (r * r) + 98.0 * b2 * d * d / (r * r) + 32.0 * b2 * d * d / r +
        32.0 * b2 * d / r + 16.0 * d * d / r + 32.0 * b2 * bx4 + 16.0;
  } else {
    g = 64.0 * d * d / (r * r) * b2 + 64.0 * d * d / r * b2 + 32.0 * d * d / r + 392.0 * d / (r * r) * b2 +
        64.0 * b2 / r + 32.0 * b2 * bx4 + 16.0;
  }
  return {g, (g + 1.0) * cfg.weight_cap * std::sqrt(static_cast<double>(cfg.horizon)) / 2.0};
}

}  // namespace rcc
