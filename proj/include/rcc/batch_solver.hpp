#pragma once

// Joint optimisation of (w, b, r) by alternating between the classifier and
// the allocation. Each half-step is an exact or descent minimisation of the
// same objective, so the recorded objective never increases.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rcc/allocation.hpp"
#include "rcc/losses.hpp"

namespace rcc {

struct SolveReport {
  LinearClassifier classifier;
  AllocationResult allocation;
  /// Objective after every half-step, starting with the initial point.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  /// Set when the warm start separates the data with unit margin.
  bool separable_warning = false;
};

namespace detail {

inline AllocationResult uniform_allocation(std::size_t d, double budget) {
  AllocationResult a;
  a.r = ResourceVector::uniform(d, budget);
  a.funded_set.resize(d);
  for (std::size_t i = 0; i < d; ++i) a.funded_set[i] = i;
  return a;
}

}  // namespace detail

/// Generalised ridge step: argmin_{w,b} sum_i w_i^2 sigma_i(r_i)^2 + MSE(w, b).
///
/// The bias is left unpenalised and eliminated by centring, leaving
/// (Xc^T Xc / M + diag(sigma^2)) w = Xc^T yc / M.
inline LinearClassifier ridge_step(const Dataset& ds, const Vector& penalty) {
  require(ds.samples() >= 1, ErrorKind::Data, "ridge step needs at least one sample");
  require(penalty.size() == static_cast<Eigen::Index>(ds.dims()), ErrorKind::Argument,
          "penalty and dataset dimensions differ");
  const double m = static_cast<double>(ds.samples());
  const Eigen::RowVectorXd xbar = ds.features.colwise().mean();
  const double ybar = ds.labels.mean();
  const Matrix xc = ds.features.rowwise() - xbar;
  const Vector yc = ds.labels.array() - ybar;

  const auto d = static_cast<Eigen::Index>(ds.dims());
  LinearClassifier clf = LinearClassifier::zeros(ds.dims());
  // Infinite penalties pin their weights to zero; solve on the rest.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < d; ++i)
    if (std::isfinite(penalty[i])) active.push_back(i);

  if (!active.empty()) {
    const auto k = static_cast<Eigen::Index>(active.size());
    Matrix xa(xc.rows(), k);
    Vector pa(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      xa.col(j) = xc.col(active[static_cast<std::size_t>(j)]);
      pa[j] = penalty[active[static_cast<std::size_t>(j)]];
    }
    Matrix a = xa.transpose() * xa / m;
    a.diagonal() += pa;
    Vector rhs = xa.transpose() * yc / m;
    // Jacobi scaling so that very large penalties do not swamp the rank test.
    Vector scale(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      require(a(j, j) > 0.0, ErrorKind::RankDeficient,
              "ridge normal equations are singular (zero penalty on a constant feature)");
      scale[j] = 1.0 / std::sqrt(a(j, j));
    }
    a = scale.asDiagonal() * a * scale.asDiagonal();
    rhs = scale.cwiseProduct(rhs);
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    qr.setThreshold(1e-13);
    require(qr.rank() == k, ErrorKind::RankDeficient,
            "ridge normal equations are singular (zero penalty on a rank-deficient design)");
    const Vector wa = scale.cwiseProduct(qr.solve(rhs));
    for (Eigen::Index j = 0; j < k; ++j) clf.weights[active[static_cast<std::size_t>(j)]] = wa[j];
  }
  clf.bias = ybar - xbar.dot(clf.weights);
  return clf;
}

inline LinearClassifier ridge_step(const Dataset& ds, const ResourceVector& r, const NoiseModel& nm) {
  require(r.size() == ds.dims(), ErrorKind::Argument, "resource vector and dataset dimensions differ");
  Vector penalty(static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) penalty[static_cast<Eigen::Index>(i)] = nm.variance(i, r[i]);
  return ridge_step(ds, penalty);
}

struct AlternatingOptions {
  double tol = 1e-6;
  int max_iter = 200;
  /// Keep r uniform; the solve then reduces to a single ridge step.
  bool lock_uniform = false;
};

/// Alternates ridge_step and allocate_theorem1 on the expected square loss.
inline SolveReport solve_square_alternating(const Dataset& ds, const NoiseModel& nm, double budget,
                                            const AlternatingOptions& opt = {}) {
  ds.validate(false);
  require(budget > 0.0, ErrorKind::Argument, "budget must be positive");
  const std::size_t d = ds.dims();
  auto objective = [&](const LinearClassifier& c, const ResourceVector& r) {
    return square_loss_total(ds, c, r, nm).total;
  };

  SolveReport rep;
  rep.allocation = detail::uniform_allocation(d, budget);
  rep.classifier = ridge_step(ds, rep.allocation.r, nm);
  rep.objective_trace.push_back(objective(rep.classifier, rep.allocation.r));
  if (opt.lock_uniform) {
    rep.converged = true;
    return rep;
  }

  double prev_round = rep.objective_trace.back();
  for (int it = 1; it <= opt.max_iter; ++it) {
    rep.iterations = it;
    if (rep.classifier.is_zero()) {
      rep.degenerate = true;
      rep.allocation = detail::uniform_allocation(d, budget);
      break;
    }
    AllocationResult alloc = allocate_theorem1(rep.classifier, nm, budget);
    const double f_alloc = objective(rep.classifier, alloc.r);
    if (f_alloc <= rep.objective_trace.back()) rep.allocation = std::move(alloc);
    rep.objective_trace.push_back(std::min(f_alloc, rep.objective_trace.back()));

    LinearClassifier next = ridge_step(ds, rep.allocation.r, nm);
    const double f_ridge = objective(next, rep.allocation.r);
    if (f_ridge <= rep.objective_trace.back()) rep.classifier = std::move(next);
    rep.objective_trace.push_back(std::min(f_ridge, rep.objective_trace.back()));

    const double cur = rep.objective_trace.back();
    if (prev_round - cur <= opt.tol * std::max(std::abs(prev_round), 1e-300)) {
      rep.converged = true;
      break;
    }
    prev_round = cur;
  }
  // Report the KKT state of the returned pair.
  if (!rep.degenerate && !rep.classifier.is_zero()) {
    AllocationResult check = allocate_theorem1(rep.classifier, nm, budget);
    if (objective(rep.classifier, check.r) <= rep.objective_trace.back()) {
      rep.allocation = std::move(check);
    } else {
      rep.allocation.residual = check.residual;
      rep.allocation.lambda = check.lambda;
    }
  }
  return rep;
}

//------------------------------------------------------------------------------
// Robust hinge
//------------------------------------------------------------------------------

/// Diminishing step rule c_eff / sqrt(t) applied to normalised subgradients,
/// c_eff = max(c / L, relative * |theta_0|) with L the largest norm of an
/// augmented sample (x_i, 1). A step of c / L moves no margin by more than c.
struct StepSchedule {
  double c = 2.0;
  double relative = 0.01;
  int inner_iterations = 2000;
};

struct InnerResult {
  LinearClassifier classifier;
  double objective = 0.0;
};

/// Projected subgradient descent with iterate averaging on
/// ||s .* w||_2 + sum_i max(0, 1 - y_i (w^T x_i + b)) for fixed semi-axes s.
/// Returns the best of the tracked iterates and their running average; the
/// result is never worse than the starting point.
inline InnerResult minimize_robust_hinge(const Dataset& ds, const Vector& semi_axes, const LinearClassifier& init,
                                         const StepSchedule& sched) {
  const auto d = static_cast<Eigen::Index>(ds.dims());
  Vector theta(d + 1);
  theta.head(d) = init.weights;
  theta[d] = init.bias;
  auto unpack = [d](const Vector& t) { return LinearClassifier{t.head(d), t[d]}; };

  const double f0 = robust_hinge_objective(ds, init, semi_axes);
  if (f0 == 0.0) return {init, 0.0};
  Vector best = theta;
  double f_best = f0;
  Vector avg = theta;
  double weight_sum = 0.0;
  const double radius = std::sqrt((ds.features.rowwise().squaredNorm().array() + 1.0).maxCoeff());
  const double c = std::max(sched.c / radius, sched.relative * theta.norm());
  const auto m = static_cast<double>(ds.samples());

  for (int t = 1; t <= sched.inner_iterations; ++t) {
    const Vector g = robust_hinge_subgradient(ds, unpack(theta), semi_axes);
    const double gn = g.norm();
    if (gn == 0.0) break;
    const double eta = c / std::sqrt(static_cast<double>(t));
    theta -= (eta / gn) * g;
    const double f = robust_hinge_objective(ds, unpack(theta), semi_axes);
    if (!std::isfinite(f) || f > 10.0 * std::max(f0, m))
      fail(ErrorKind::Divergence, "robust hinge subgradient diverged (objective " + std::to_string(f) +
                                      " vs initial " + std::to_string(f0) + "); reduce the step constant");
    if (f < f_best) {
      f_best = f;
      best = theta;
    }
    // Average the second half of the run with step weights.
    if (2 * t > sched.inner_iterations) {
      weight_sum += eta;
      avg = weight_sum == eta ? theta : Vector(avg + (eta / weight_sum) * (theta - avg));
    }
  }
  if (weight_sum > 0.0) {
    const double fa = robust_hinge_objective(ds, unpack(avg), semi_axes);
    if (fa < f_best) {
      f_best = fa;
      best = avg;
    }
  }
  return {unpack(best), f_best};
}

struct RobustHingeOptions {
  StepSchedule schedule{};
  double tol = 1e-6;
  int max_iter = 200;
  /// Overrides the plain-hinge warm start.
  std::optional<LinearClassifier> warm_start;
};

/// Plain hinge minimisation (no uncertainty) from w = 0.
inline LinearClassifier plain_hinge_warm_start(const Dataset& ds, const StepSchedule& sched) {
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(ds.dims()));
  StepSchedule s = sched;
  s.inner_iterations = std::max(sched.inner_iterations, 1);
  return minimize_robust_hinge(ds, zero, LinearClassifier::zeros(ds.dims()), s).classifier;
}

/// Alternates the robust-hinge classifier step and allocate_adversarial.
inline SolveReport solve_robust_hinge(const Dataset& ds, const NoiseModel& nm, double budget,
                                      const RobustHingeOptions& opt = {}) {
  ds.validate(true);
  require(budget > 0.0, ErrorKind::Argument, "budget must be positive");
  const std::size_t d = ds.dims();

  SolveReport rep;
  rep.classifier = opt.warm_start ? *opt.warm_start : plain_hinge_warm_start(ds, opt.schedule);
  require(rep.classifier.dims() == d, ErrorKind::Argument, "warm start dimension differs from the dataset");
  rep.separable_warning = hinge_sum(ds, rep.classifier) == 0.0;
  rep.allocation = detail::uniform_allocation(d, budget);

  auto objective = [&](const LinearClassifier& c, const ResourceVector& r) {
    return robust_hinge_objective(ds, c, r, nm);
  };
  rep.objective_trace.push_back(objective(rep.classifier, rep.allocation.r));

  // Classifier step at the initial allocation.
  {
    InnerResult in = minimize_robust_hinge(ds, sigma_vector(rep.allocation.r, nm), rep.classifier, opt.schedule);
    if (in.objective <= rep.objective_trace.back()) rep.classifier = in.classifier;
    rep.objective_trace.push_back(std::min(in.objective, rep.objective_trace.back()));
  }

  double prev_round = rep.objective_trace.back();
  for (int it = 1; it <= opt.max_iter; ++it) {
    rep.iterations = it;
    if (rep.classifier.is_zero()) {
      rep.degenerate = true;
      break;
    }
    AllocationResult alloc = allocate_adversarial(rep.classifier, nm, budget);
    const double f_alloc = objective(rep.classifier, alloc.r);
    if (f_alloc <= rep.objective_trace.back()) rep.allocation = std::move(alloc);
    rep.objective_trace.push_back(std::min(f_alloc, rep.objective_trace.back()));

    InnerResult in = minimize_robust_hinge(ds, sigma_vector(rep.allocation.r, nm), rep.classifier, opt.schedule);
    if (in.objective <= rep.objective_trace.back()) rep.classifier = in.classifier;
    rep.objective_trace.push_back(std::min(in.objective, rep.objective_trace.back()));

    const double cur = rep.objective_trace.back();
    if (prev_round - cur <= opt.tol * std::max(std::abs(prev_round), 1e-300)) {
      rep.converged = true;
      break;
    }
    prev_round = cur;
  }
  return rep;
}

/// Robust hinge classifier for a fixed allocation (no allocation updates).
inline InnerResult fit_robust_hinge_fixed(const Dataset& ds, const ResourceVector& r, const NoiseModel& nm,
                                          const LinearClassifier& init, const StepSchedule& sched) {
  ds.validate(true);
  return minimize_robust_hinge(ds, sigma_vector(r, nm), init, sched);
}

}  // namespace rcc
