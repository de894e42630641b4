#pragma once

// Expected and robust losses of a linear classifier under per-feature noise.

#include <cmath>
#include <numbers>

#include "rcc/core_model.hpp"

namespace rcc {

struct LossValue {
  double total = 0.0;
  double data_term = 0.0;
  double noise_term = 0.0;
};

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// erfc keeps full relative precision in the lower tail.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Mean squared residual of (w, b) on the clean data.
inline double mean_squared_error(const Dataset& ds, const LinearClassifier& clf) {
  require(clf.dims() == ds.dims(), ErrorKind::Argument, "classifier and dataset dimensions differ");
  Vector resid = ds.labels - ds.features * clf.weights;
  resid.array() -= clf.bias;
  return resid.squaredNorm() / static_cast<double>(ds.samples());
}

/// Expected square loss with zero-mean noise of sd sigma_i(r_i):
/// sigma(w, r)^2 + MSE(w, b).
inline LossValue square_loss_total(const Dataset& ds, const LinearClassifier& clf, const ResourceVector& r,
                                   const NoiseModel& nm) {
  const double s = sigma_aggregate(clf, r, nm);
  LossValue v;
  v.data_term = mean_squared_error(ds, clf);
  v.noise_term = s * s;
  v.total = v.data_term + v.noise_term;
  return v;
}

/// E[max(0, 1 - (margin + Z))] with Z ~ N(0, sigma^2), via
/// (1 - m) Phi((1 - m) / sigma) + sigma phi((1 - m) / sigma).
inline double gaussian_hinge_expected(double margin, double sigma) {
  require(sigma >= 0.0 && !std::isnan(sigma), ErrorKind::Argument, "sigma must be nonnegative");
  const double u = 1.0 - margin;
  if (sigma == 0.0) return std::max(0.0, u);
  const double z = u / sigma;
  return u * normal_cdf(z) + sigma * normal_pdf(z);
}

/// Mean expected hinge loss over the dataset at the aggregate noise level.
inline double hinge_loss_expected(const Dataset& ds, const LinearClassifier& clf, const ResourceVector& r,
                                  const NoiseModel& nm) {
  require(ds.has_binary_labels(), ErrorKind::Data, "hinge loss needs labels in {-1, +1}");
  const double s = sigma_aggregate(clf, r, nm);
  const Vector dec = (ds.features * clf.weights).array() + clf.bias;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < dec.size(); ++i) acc += gaussian_hinge_expected(ds.labels[i] * dec[i], s);
  return acc / static_cast<double>(ds.samples());
}

/// sup over the ellipsoid {delta : sum (delta_i / s_i)^2 <= 1} of w^T delta,
/// i.e. || s .* w ||_2 for per-feature semi-axes s.
inline double ellipsoid_support(const Vector& w, const Vector& semi_axes) {
  return (w.array() * semi_axes.array()).matrix().norm();
}

inline Vector sigma_vector(const ResourceVector& r, const NoiseModel& nm) {
  Vector s(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) s[static_cast<Eigen::Index>(i)] = nm.sigma(i, r[i]);
  return s;
}

inline double hinge_sum(const Dataset& ds, const LinearClassifier& clf) {
  const Vector dec = (ds.features * clf.weights).array() + clf.bias;
  return (1.0 - ds.labels.array() * dec.array()).max(0.0).sum();
}

/// Robust hinge objective against an ellipsoid adversary with semi-axes
/// sigma_i(r_i): support term plus the summed hinge slacks.
inline double robust_hinge_objective(const Dataset& ds, const LinearClassifier& clf, const ResourceVector& r,
                                     const NoiseModel& nm) {
  require(ds.has_binary_labels(), ErrorKind::Data, "robust hinge needs labels in {-1, +1}");
  require(clf.dims() == ds.dims(), ErrorKind::Argument, "classifier and dataset dimensions differ");
  return sigma_aggregate(clf, r, nm) + hinge_sum(ds, clf);
}

/// Same objective for explicit semi-axes (sigma may be zero).
inline double robust_hinge_objective(const Dataset& ds, const LinearClassifier& clf, const Vector& semi_axes) {
  require(ds.has_binary_labels(), ErrorKind::Data, "robust hinge needs labels in {-1, +1}");
  return ellipsoid_support(clf.weights, semi_axes) + hinge_sum(ds, clf);
}

/// One subgradient of the robust hinge objective in (w, b), packed as
/// [g_w; g_b]. The support term contributes 0 at w = 0.
inline Vector robust_hinge_subgradient(const Dataset& ds, const LinearClassifier& clf, const Vector& semi_axes) {
  const auto d = clf.weights.size();
  Vector g = Vector::Zero(d + 1);
  const Vector sw = (clf.weights.array() * semi_axes.array()).matrix();
  const double support = sw.norm();
  if (support > 0.0) g.head(d) = (sw.array() * semi_axes.array()).matrix() / support;
  const Vector dec = (ds.features * clf.weights).array() + clf.bias;
  for (Eigen::Index i = 0; i < dec.size(); ++i) {
    if (1.0 - ds.labels[i] * dec[i] > 0.0) {
      g.head(d) -= ds.labels[i] * ds.features.row(i).transpose();
      g[d] -= ds.labels[i];
    }
  }
  return g;
}

/// Fraction of samples whose sign(w^T x + b) (ties to +1) disagrees with y.
inline double error_rate(const Dataset& ds, const LinearClassifier& clf) {
  const Vector dec = (ds.features * clf.weights).array() + clf.bias;
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < dec.size(); ++i) {
    const double pred = dec[i] >= 0.0 ? 1.0 : -1.0;
    if (pred != ds.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(ds.samples());
}

}  // namespace rcc
