#pragma once

// Resource-ratio analysis: how much budget uniform allocation needs compared
// with optimal allocation to reach the same square loss.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <utility>

#include "rcc/allocation.hpp"
#include "rcc/losses.hpp"

namespace rcc {

/// d |w|_2^2 / |w|_1^2, always in [1, d].
inline double ratio_theorem2(const Vector& w) {
  require(w.size() >= 1, ErrorKind::Argument, "empty weight vector");
  const double l1 = w.lpNorm<1>();
  require(l1 > 0.0, ErrorKind::DegenerateClassifier, "ratio undefined for the zero classifier");
  return static_cast<double>(w.size()) * w.squaredNorm() / (l1 * l1);
}

enum class BudgetRule { Uniform, Optimal };

/// Allocation used by equal_loss_budget for a given rule and budget. Unit-scale
/// inverse and inverse-sqrt models use their closed forms.
inline ResourceVector rule_allocation(const LinearClassifier& clf, const NoiseModel& nm, double budget,
                                      BudgetRule rule) {
  if (rule == BudgetRule::Uniform) return ResourceVector::uniform(clf.dims(), budget);
  bool unit = true;
  for (std::size_t i = 0; i < clf.dims(); ++i) unit = unit && nm.scale(i) == 1.0;
  if (unit && nm.family() == NoiseFamily::InverseSqrtResource) return allocate_inverse_sqrt(clf, budget);
  if (unit && nm.family() == NoiseFamily::InverseResource) return allocate_inverse(clf, budget);
  return allocate_theorem1(clf, nm, budget).r;
}

/// Smallest budget at which the square loss of (w, b) under the given rule
/// reaches target_loss. Bracket grows geometrically from 1e-6, then
/// bisection in log R to relative width 1e-12.
inline double equal_loss_budget(const Dataset& ds, const LinearClassifier& clf, const NoiseModel& nm,
                                double target_loss, BudgetRule rule) {
  require(!clf.is_zero(), ErrorKind::DegenerateClassifier, "budget search needs a nonzero classifier");
  const double floor_loss = mean_squared_error(ds, clf);
  if (!(target_loss > floor_loss)) {
    std::ostringstream msg;
    msg << "target loss " << target_loss << " is not above the MSE floor " << floor_loss;
    fail(ErrorKind::UnattainableLoss, msg.str());
  }
  auto loss_at = [&](double budget) {
    return square_loss_total(ds, clf, rule_allocation(clf, nm, budget, rule), nm).total;
  };
  double lo = 1e-6;
  double hi = 1e-6;
  if (loss_at(lo) <= target_loss) {
    while (loss_at(lo) <= target_loss) {
      hi = lo;
      lo *= 0.5;
      require(lo > 1e-300, ErrorKind::UnattainableLoss, "target reached at vanishing budget");
    }
  } else {
    while (loss_at(hi) > target_loss) {
      lo = hi;
      hi *= 2.0;
      require(std::isfinite(hi) && hi < 1e300, ErrorKind::UnattainableLoss, "budget search did not bracket target");
    }
  }
  while (hi / lo - 1.0 > 1e-12) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    if (loss_at(mid) > target_loss)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

struct RatioReport {
  double theoretical_ratio = 0.0;
  double empirical_ratio = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
};

/// Budget ratio R_unif / R_opt for one classifier at a target loss, next to
/// its closed-form value.
inline RatioReport ratio_report(const Dataset& ds, const LinearClassifier& clf, const NoiseModel& nm,
                                double target_loss) {
  RatioReport rep;
  rep.theoretical_ratio = ratio_theorem2(clf.weights);
  rep.empirical_ratio = equal_loss_budget(ds, clf, nm, target_loss, BudgetRule::Uniform) /
                        equal_loss_budget(ds, clf, nm, target_loss, BudgetRule::Optimal);
  return rep;
}

/// (d |w_u|_2^2 / |w_u|_1^2, d |w_o|_2^2 / |w_o|_1^2) for the classifier
/// trained under uniform allocation and the jointly optimal one.
inline std::pair<double, double> corollary3_bounds(const Vector& w_unif, const Vector& w_opt) {
  require(w_unif.size() == w_opt.size(), ErrorKind::Argument, "classifier dimensions differ");
  return {ratio_theorem2(w_unif), ratio_theorem2(w_opt)};
}

struct ConvexityReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double max_violation = 0.0;
};

using ConvexityLoss = std::function<double(const Vector&)>;
using SegmentSampler = std::function<std::pair<Vector, Vector>(Engine&)>;

/// Midpoint convexity along random segments: counts f(mid) exceeding the
/// endpoint average by more than 1e-10 (relative to the larger magnitude).
inline ConvexityReport verify_convexity(const ConvexityLoss& loss, const SegmentSampler& sampler,
                                        std::size_t n_checks, Engine& eng) {
  ConvexityReport rep;
  for (std::size_t k = 0; k < n_checks; ++k) {
    auto [a, b] = sampler(eng);
    const double fa = loss(a);
    const double fb = loss(b);
    const double fm = loss(0.5 * (a + b));
    const double avg = 0.5 * (fa + fb);
    const double excess = fm - avg;
    const double slack = 1e-10 * std::max({1.0, std::abs(fa), std::abs(fb)});
    ++rep.checks;
    if (excess > slack) {
      ++rep.violations;
      rep.max_violation = std::max(rep.max_violation, excess);
    }
  }
  return rep;
}

/// Segment sampler on the scaled simplex {r : sum r = R, r_i >= floor}.
inline SegmentSampler simplex_segments(std::size_t d, double budget, double floor) {
  return [d, budget, floor](Engine& eng) {
    std::exponential_distribution<double> ex(1.0);
    auto draw = [&] {
      Vector e(static_cast<Eigen::Index>(d));
      for (auto& v : e) v = ex(eng);
      return Vector((floor + (budget - static_cast<double>(d) * floor) * e.array() / e.sum()).matrix());
    };
    Vector a = draw();
    Vector b = draw();
    return std::make_pair(std::move(a), std::move(b));
  };
}

}  // namespace rcc
