#pragma once

// Domain types shared by every solver: datasets, linear classifiers,
// resource vectors, per-feature noise models, and the helpers that sample
// synthetic data and corrupt features with resource-dependent noise.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rcc/errors.hpp"
#include "rcc/rng.hpp"

namespace rcc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

//------------------------------------------------------------------------------
// Dataset
//------------------------------------------------------------------------------

struct Dataset {
  Matrix features;  // M x d
  Vector labels;    // M
  std::vector<std::string> feature_names;

  std::size_t samples() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }

  bool has_binary_labels() const {
    for (Eigen::Index i = 0; i < labels.size(); ++i)
      if (labels[i] != 1.0 && labels[i] != -1.0) return false;
    return true;
  }

  /// Throws ErrorKind::Data when the shape or contents are unusable.
  void validate(bool classification) const {
    require(features.rows() >= 1 && features.cols() >= 1, ErrorKind::Data,
            "dataset must have at least one sample and one feature");
    require(labels.size() == features.rows(), ErrorKind::Data,
            "label count does not match sample count");
    require(features.allFinite() && labels.allFinite(), ErrorKind::Data,
            "dataset contains NaN or Inf");
    require(feature_names.empty() || feature_names.size() == dims(), ErrorKind::Data,
            "feature_names length does not match feature count");
    if (classification)
      require(has_binary_labels(), ErrorKind::Data, "classification labels must be -1 or +1");
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto src = static_cast<Eigen::Index>(rows[k]);
      out.features.row(static_cast<Eigen::Index>(k)) = features.row(src);
      out.labels[static_cast<Eigen::Index>(k)] = labels[src];
    }
    out.feature_names = feature_names;
    return out;
  }
};

//------------------------------------------------------------------------------
// LinearClassifier
//------------------------------------------------------------------------------

struct LinearClassifier {
  Vector weights;
  double bias = 0.0;

  static LinearClassifier zeros(std::size_t d) { return {Vector::Zero(static_cast<Eigen::Index>(d)), 0.0}; }

  std::size_t dims() const { return static_cast<std::size_t>(weights.size()); }

  template <typename Row>
  double decision(const Row& x) const {
    return weights.dot(x) + bias;
  }

  /// Sign with ties mapped to +1.
  template <typename Row>
  int predict(const Row& x) const {
    return decision(x) >= 0.0 ? 1 : -1;
  }

  bool is_zero() const { return (weights.array() == 0.0).all(); }
};

//------------------------------------------------------------------------------
// ResourceVector
//------------------------------------------------------------------------------

/// Nonnegative allocation r with sum(r) <= budget.
class ResourceVector {
 public:
  ResourceVector() = default;

  ResourceVector(Vector alloc, double budget) : alloc_(std::move(alloc)), budget_(budget) {
    require(budget_ > 0.0 && std::isfinite(budget_), ErrorKind::InfeasibleAllocation,
            "resource budget must be positive and finite");
    require(alloc_.size() >= 1, ErrorKind::InfeasibleAllocation, "empty resource vector");
    const double slack = 1e-8 * budget_;
    for (Eigen::Index i = 0; i < alloc_.size(); ++i) {
      require(std::isfinite(alloc_[i]) && alloc_[i] >= 0.0, ErrorKind::InfeasibleAllocation,
              "resource entries must be finite and nonnegative");
    }
    require(alloc_.sum() <= budget_ + slack, ErrorKind::InfeasibleAllocation,
            "resource vector exceeds its budget");
  }

  static ResourceVector uniform(std::size_t d, double budget) {
    return ResourceVector(Vector::Constant(static_cast<Eigen::Index>(d), budget / static_cast<double>(d)),
                          budget);
  }

  const Vector& values() const { return alloc_; }
  double budget() const { return budget_; }
  std::size_t size() const { return static_cast<std::size_t>(alloc_.size()); }
  double operator[](std::size_t i) const { return alloc_[static_cast<Eigen::Index>(i)]; }
  double total() const { return alloc_.sum(); }

 private:
  Vector alloc_;
  double budget_ = 1.0;
};

//------------------------------------------------------------------------------
// NoiseModel
//------------------------------------------------------------------------------

enum class NoiseFamily {
  InverseResource,      // sigma(r) = c / r
  InverseSqrtResource,  // sigma(r) = c / sqrt(r)
  QuantizationExp,      // sigma(r) = c * 2^-r
  CustomTabulated,      // monotone piecewise-linear table
};

/// Sampled sigma(r). Knots strictly increasing, values positive.
struct NoiseTable {
  std::vector<double> knots;
  std::vector<double> values;
};

/// Per-feature map r_i -> sigma_i(r_i).
///
/// Built-in families carry a per-feature scale c_i (empty: all ones, one
/// entry: broadcast). Tabulated models carry one table per feature, or a
/// single shared table. The floor r_min is the smallest allocation at which
/// sigma is evaluated; by default it is 1e-9 of the budget.
class NoiseModel {
 public:
  static NoiseModel inverse(std::vector<double> scale = {}) {
    return NoiseModel(NoiseFamily::InverseResource, std::move(scale));
  }
  static NoiseModel inverse_sqrt(std::vector<double> scale = {}) {
    return NoiseModel(NoiseFamily::InverseSqrtResource, std::move(scale));
  }
  static NoiseModel quantization(std::vector<double> scale = {}) {
    return NoiseModel(NoiseFamily::QuantizationExp, std::move(scale));
  }
  static NoiseModel of_family(NoiseFamily f, std::vector<double> scale = {}) {
    require(f != NoiseFamily::CustomTabulated, ErrorKind::InvalidNoiseModel,
            "tabulated models need a table; use NoiseModel::tabulated");
    return NoiseModel(f, std::move(scale));
  }
  static NoiseModel tabulated(std::vector<NoiseTable> tables) {
    require(!tables.empty(), ErrorKind::InvalidNoiseModel, "no noise tables given");
    for (const auto& t : tables) {
      require(t.knots.size() >= 2 && t.knots.size() == t.values.size(), ErrorKind::InvalidNoiseModel,
              "noise table needs >= 2 knots and matching values");
      for (std::size_t k = 0; k < t.knots.size(); ++k) {
        require(std::isfinite(t.knots[k]) && std::isfinite(t.values[k]) && t.values[k] > 0.0 &&
                    t.knots[k] > 0.0,
                ErrorKind::InvalidNoiseModel, "noise table entries must be finite and positive");
        if (k > 0)
          require(t.knots[k] > t.knots[k - 1], ErrorKind::InvalidNoiseModel,
                  "noise table knots must be strictly increasing");
      }
    }
    NoiseModel m(NoiseFamily::CustomTabulated, {});
    m.tables_ = std::move(tables);
    return m;
  }

  NoiseModel& with_absolute_floor(double r_min) {
    require(r_min > 0.0, ErrorKind::InvalidNoiseModel, "resource floor must be positive");
    abs_floor_ = r_min;
    return *this;
  }
  NoiseModel& with_relative_floor(double fraction) {
    require(fraction > 0.0 && fraction < 1.0, ErrorKind::InvalidNoiseModel,
            "relative floor must lie in (0, 1)");
    rel_floor_ = fraction;
    abs_floor_.reset();
    return *this;
  }

  NoiseFamily family() const { return family_; }

  double floor(double budget) const { return abs_floor_ ? *abs_floor_ : rel_floor_ * budget; }

  double scale(std::size_t i) const {
    if (scale_.empty()) return 1.0;
    if (scale_.size() == 1) return scale_[0];
    require(i < scale_.size(), ErrorKind::InvalidNoiseModel, "feature index outside noise scale vector");
    return scale_[i];
  }

  double sigma(std::size_t i, double r) const {
    if (!(r > 0.0)) return kInf;
    switch (family_) {
      case NoiseFamily::InverseResource: return scale(i) / r;
      case NoiseFamily::InverseSqrtResource: return scale(i) / std::sqrt(r);
      case NoiseFamily::QuantizationExp: return scale(i) * std::exp2(-r);
      case NoiseFamily::CustomTabulated: return table_eval(table(i), r);
    }
    return kInf;
  }

  /// d sigma_i / d r. Analytic for the built-in families, central
  /// differences on the interpolant for tables.
  double dsigma(std::size_t i, double r) const {
    switch (family_) {
      case NoiseFamily::InverseResource: return -scale(i) / (r * r);
      case NoiseFamily::InverseSqrtResource: return -0.5 * scale(i) / (r * std::sqrt(r));
      case NoiseFamily::QuantizationExp: return -std::log(2.0) * scale(i) * std::exp2(-r);
      case NoiseFamily::CustomTabulated: {
        const double h = 1e-6 * r;
        const auto& t = table(i);
        return (table_eval(t, r + h) - table_eval(t, r - h)) / (2.0 * h);
      }
    }
    return 0.0;
  }

  double variance(std::size_t i, double r) const {
    const double s = sigma(i, r);
    return s * s;
  }

  double dvariance(std::size_t i, double r) const { return 2.0 * sigma(i, r) * dsigma(i, r); }

  /// Tabulated models must be strictly decreasing to be usable by the
  /// allocators. Built-in families always are.
  bool is_strictly_decreasing() const {
    if (family_ != NoiseFamily::CustomTabulated) return true;
    for (const auto& t : tables_)
      for (std::size_t k = 1; k < t.values.size(); ++k)
        if (!(t.values[k] < t.values[k - 1])) return false;
    return true;
  }

 private:
  NoiseModel(NoiseFamily f, std::vector<double> scale) : family_(f), scale_(std::move(scale)) {
    for (double c : scale_)
      require(std::isfinite(c) && c >= 0.0, ErrorKind::InvalidNoiseModel,
              "noise scale constants must be finite and nonnegative");
  }

  const NoiseTable& table(std::size_t i) const {
    if (tables_.size() == 1) return tables_[0];
    require(i < tables_.size(), ErrorKind::InvalidNoiseModel, "feature index outside noise tables");
    return tables_[i];
  }

  // Linear interpolation between knots; the first segment is extended to
  // the left, and past the last knot the table decays like 1/r.
  static double table_eval(const NoiseTable& t, double r) {
    const auto& k = t.knots;
    const auto& v = t.values;
    if (r >= k.back()) return v.back() * k.back() / r;
    std::size_t hi = static_cast<std::size_t>(std::upper_bound(k.begin(), k.end(), r) - k.begin());
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double a = (r - k[lo]) / (k[hi] - k[lo]);
    return v[lo] + a * (v[hi] - v[lo]);
  }

  NoiseFamily family_;
  std::vector<double> scale_;
  std::vector<NoiseTable> tables_;
  double rel_floor_ = 1e-9;
  std::optional<double> abs_floor_;
};

inline const char* to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::InverseResource: return "inverse";
    case NoiseFamily::InverseSqrtResource: return "inverse-sqrt";
    case NoiseFamily::QuantizationExp: return "quantization";
    case NoiseFamily::CustomTabulated: return "tabulated";
  }
  return "?";
}

inline NoiseFamily parse_noise_family(const std::string& s) {
  if (s == "inverse") return NoiseFamily::InverseResource;
  if (s == "inverse-sqrt") return NoiseFamily::InverseSqrtResource;
  if (s == "quantization") return NoiseFamily::QuantizationExp;
  if (s == "tabulated") return NoiseFamily::CustomTabulated;
  fail(ErrorKind::Config, "unknown noise family '" + s + "'");
}

//------------------------------------------------------------------------------
// FeasibleSet
//------------------------------------------------------------------------------

enum class CapNorm { L1, L2 };

struct FeasibleSet {
  double budget = 1.0;
  double weight_cap = 1.0;
  CapNorm cap_norm = CapNorm::L2;
  double resource_floor = 0.0;

  /// Largest distance between two feasible (w, r) points.
  double diameter() const { return 2.0 * std::sqrt(budget * budget + weight_cap * weight_cap); }

  bool contains(const Vector& w, const Vector& r, double tol = 1e-9) const {
    const double wn = cap_norm == CapNorm::L2 ? w.norm() : w.lpNorm<1>();
    if (wn > weight_cap * (1.0 + tol)) return false;
    if (std::abs(r.sum() - budget) > tol * budget) return false;
    return (r.array() >= resource_floor - tol * budget).all();
  }
};

//------------------------------------------------------------------------------
// Operations
//------------------------------------------------------------------------------

/// Standard deviation of the noise projected on the classifier direction,
/// sqrt(sum_i w_i^2 sigma_i(r_i)^2). Features with w_i == 0 contribute
/// nothing and may sit below the floor.
inline double sigma_aggregate(const LinearClassifier& clf, const ResourceVector& r, const NoiseModel& nm) {
  require(clf.dims() == r.size(), ErrorKind::Argument, "classifier and resource vector dimensions differ");
  const double floor = nm.floor(r.budget());
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double wi = clf.weights[static_cast<Eigen::Index>(i)];
    if (wi == 0.0) continue;
    if (r[i] < floor * (1.0 - 1e-12))
      fail(ErrorKind::InfeasibleAllocation,
           "feature " + std::to_string(i) + " has nonzero weight but allocation below the floor");
    const double s = nm.sigma(i, r[i]);
    acc += wi * wi * s * s;
  }
  return std::sqrt(acc);
}

/// Label of the synthetic divider z = x + a*y with additive label noise.
/// A margin of exactly zero maps to +1.
inline double synthetic_label(double x, double y, double z, double a, double label_noise = 0.0) {
  return (z - x - a * y + label_noise) >= 0.0 ? 1.0 : -1.0;
}

/// Sampling box for the synthetic problem: x, y in [0, 1] and z spanning the
/// range of x + a*y, so the divider splits the box into equal halves.
struct SyntheticBox {
  double z_lo;
  double z_hi;
  static SyntheticBox for_divider(double a) { return {std::min(0.0, a), 1.0 + std::max(0.0, a)}; }
};

inline Dataset generate_synthetic(double a, long long n, double label_noise_sd, const RngConfig& rng) {
  require(n >= 1, ErrorKind::Argument, "synthetic sample count must be positive");
  require(std::isfinite(a), ErrorKind::Argument, "divider slope must be finite");
  require(label_noise_sd >= 0.0, ErrorKind::Argument, "label noise sd must be nonnegative");
  auto eng = rng.stream(kDataStream);
  const SyntheticBox box = SyntheticBox::for_divider(a);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> zdist(box.z_lo, box.z_hi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  ds.features.resize(n, 3);
  ds.labels.resize(n);
  ds.feature_names = {"x", "y", "z"};
  for (long long i = 0; i < n; ++i) {
    const double x = unit(eng);
    const double y = unit(eng);
    const double z = zdist(eng);
    const double noise = label_noise_sd > 0.0 ? label_noise_sd * gauss(eng) : 0.0;
    ds.features(i, 0) = x;
    ds.features(i, 1) = y;
    ds.features(i, 2) = z;
    ds.labels[i] = synthetic_label(x, y, z, a, noise);
  }
  return ds;
}

/// Per-feature noise standard deviations scale * sigma_i(r_i).
inline Vector noise_sd(const ResourceVector& r, const NoiseModel& nm, double scale) {
  Vector sd(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double s = nm.sigma(i, r[i]);
    require(std::isfinite(s), ErrorKind::InfeasibleAllocation,
            "noise undefined for feature " + std::to_string(i) + " (zero allocation)");
    sd[static_cast<Eigen::Index>(i)] = scale * s;
  }
  return sd;
}

/// X + scale * sigma(r) * Z for a caller-supplied standard-normal matrix Z.
/// Sharing Z between allocations gives paired (common random number)
/// comparisons.
inline Dataset inject_noise(const Dataset& ds, const ResourceVector& r, const NoiseModel& nm, double scale,
                            const Matrix& standard_normals) {
  require(r.size() == ds.dims(), ErrorKind::Argument, "resource vector and dataset dimensions differ");
  require(standard_normals.rows() == ds.features.rows() && standard_normals.cols() == ds.features.cols(),
          ErrorKind::Argument, "noise matrix shape differs from the feature matrix");
  require(scale >= 0.0, ErrorKind::Argument, "noise scale must be nonnegative");
  Dataset out = ds;
  if (scale == 0.0) return out;
  const Vector sd = noise_sd(r, nm, scale);
  out.features += (standard_normals.array().rowwise() * sd.transpose().array()).matrix();
  return out;
}

inline Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Engine& eng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix z(rows, cols);
  // Row-major fill order so that a prefix of rows is stable under resizing.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = gauss(eng);
  return z;
}

/// Adds N(0, (scale * sigma_j(r_j))^2) noise to every entry of column j.
inline Dataset inject_noise(const Dataset& ds, const ResourceVector& r, const NoiseModel& nm, double scale,
                            const RngConfig& rng) {
  if (scale == 0.0) {
    require(r.size() == ds.dims(), ErrorKind::Argument, "resource vector and dataset dimensions differ");
    return ds;
  }
  auto eng = rng.stream(kNoiseStream);
  return inject_noise(ds, r, nm, scale, standard_normal_matrix(ds.features.rows(), ds.features.cols(), eng));
}

}  // namespace rcc
