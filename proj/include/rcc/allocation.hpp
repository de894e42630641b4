#pragma once

// Resource-allocation solvers.
//
// For a fixed classifier the aggregate noise sqrt(sum_i w_i^2 sigma_i^2(r_i))
// is minimised exactly when the separable sum S(r) = sum_i w_i^2 sigma_i^2(r_i)
// is. With each sigma_i^2 convex the marginal value
//   m_i(r) = -d/dr [w_i^2 sigma_i^2(r)]
// is nonincreasing, so the optimum is a water level lambda: funded features
// sit where m_i(r_i) = lambda, the rest stay at the floor. The allocated
// total is monotone in lambda and is solved by bisection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "rcc/core_model.hpp"

namespace rcc {

struct AllocationResult {
  ResourceVector r;
  /// Common marginal value. allocate_theorem1 reports it on the scale of
  /// -d sigma / d r_i; allocate_adversarial as -w_i^2 sigma_i sigma_i';
  /// allocate_quantization as the log2-domain threshold.
  double lambda = 0.0;
  std::vector<std::size_t> funded_set;
  /// Largest KKT violation relative to lambda (water-filling solvers) or the
  /// absolute budget mismatch (quantization).
  double residual = 0.0;
};

namespace detail {

inline void require_nonzero(const Vector& w) {
  require(w.size() >= 1, ErrorKind::Argument, "empty weight vector");
  require(w.allFinite(), ErrorKind::Argument, "weights must be finite");
  require(w.lpNorm<1>() > 0.0, ErrorKind::DegenerateClassifier,
          "allocation undefined for the zero classifier");
}

// Geometric bisection for the largest r in [lo, hi] with pred(r) true,
// where pred is true on a prefix of the interval.
template <typename Pred>
double bisect_geometric(double lo, double hi, Pred pred) {
  for (int it = 0; it < 200 && hi / lo - 1.0 > 1e-15; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

struct WaterFill {
  const Vector& w;
  const NoiseModel& nm;
  double budget;
  double floor;
  double tol;

  double marginal(std::size_t i, double r) const {
    const double wi = w[static_cast<Eigen::Index>(i)];
    if (wi == 0.0) return 0.0;
    return -wi * wi * nm.dvariance(i, r);
  }

  double level_allocation(std::size_t i, double lambda) const {
    if (marginal(i, floor) <= lambda) return floor;
    if (marginal(i, budget) >= lambda) return budget;
    return bisect_geometric(floor, budget, [&](double r) { return marginal(i, r) > lambda; });
  }

  Vector at_level(double lambda) const {
    Vector r(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) r[i] = level_allocation(static_cast<std::size_t>(i), lambda);
    return r;
  }

  AllocationResult solve() const {
    const auto d = static_cast<std::size_t>(w.size());
    require(budget > static_cast<double>(d) * floor, ErrorKind::InfeasibleSet,
            "budget does not cover the resource floor of every feature");

    double lam_hi = 0.0;
    double lam_lo = kInf;
    for (std::size_t i = 0; i < d; ++i) {
      if (w[static_cast<Eigen::Index>(i)] == 0.0) continue;
      lam_hi = std::max(lam_hi, marginal(i, floor));
      lam_lo = std::min(lam_lo, marginal(i, budget));
    }
    require(std::isfinite(lam_hi) && lam_hi > 0.0, ErrorKind::InvalidNoiseModel,
            "noise model has no usable marginal value at the floor");
    lam_lo = std::max(lam_lo, 0.0);

    // sum(at_level(lam_hi)) <= budget <= sum(at_level(lam_lo))
    for (int it = 0; it < 400; ++it) {
      const double mid = lam_lo > 0.0 ? std::sqrt(lam_lo * lam_hi) : 0.5 * (lam_lo + lam_hi);
      if (mid <= lam_lo || mid >= lam_hi) break;
      if (at_level(mid).sum() >= budget)
        lam_lo = mid;
      else
        lam_hi = mid;
      if (lam_lo > 0.0 && lam_hi / lam_lo - 1.0 < tol) break;
    }

    // Blend the two bracketing allocations so the budget is met exactly;
    // features whose level jumps inside the bracket share the same marginal.
    const Vector r_lo = at_level(lam_hi);
    const Vector r_hi = at_level(lam_lo);
    const double s_lo = r_lo.sum();
    const double s_hi = r_hi.sum();
    const double theta = s_hi > s_lo ? std::clamp((budget - s_lo) / (s_hi - s_lo), 0.0, 1.0) : 0.0;
    Vector r = r_lo + theta * (r_hi - r_lo);
    const double excess = r.sum() - budget;
    if (excess != 0.0) {
      Eigen::Index imax = 0;
      r.maxCoeff(&imax);
      r[imax] -= excess;
    }

    AllocationResult out;
    out.r = ResourceVector(r, budget);
    const double lam = lam_lo > 0.0 ? std::sqrt(lam_lo * lam_hi) : 0.5 * (lam_lo + lam_hi);
    for (std::size_t i = 0; i < d; ++i)
      if (w[static_cast<Eigen::Index>(i)] != 0.0 && marginal(i, floor) > lam &&
          r[static_cast<Eigen::Index>(i)] > floor)
        out.funded_set.push_back(i);
    out.lambda = lam;
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const bool funded = std::find(out.funded_set.begin(), out.funded_set.end(), i) != out.funded_set.end();
      const double m = marginal(i, r[static_cast<Eigen::Index>(i)]);
      if (funded && r[static_cast<Eigen::Index>(i)] < budget)
        worst = std::max(worst, std::abs(m - lam));
      else if (!funded)
        worst = std::max(worst, marginal(i, floor) - lam);
    }
    out.residual = std::max(worst, 0.0);
    return out;
  }
};

inline AllocationResult water_fill(const Vector& w, const NoiseModel& nm, double budget, double tol) {
  require(budget > 0.0 && std::isfinite(budget), ErrorKind::Argument, "budget must be positive");
  require_nonzero(w);
  require(nm.is_strictly_decreasing(), ErrorKind::InvalidNoiseModel,
          "noise model is not strictly decreasing in the resource");
  require(tol > 0.0, ErrorKind::Argument, "tolerance must be positive");
  return WaterFill{w, nm, budget, nm.floor(budget), tol}.solve();
}

}  // namespace detail

/// Optimal allocation for a fixed classifier under a general noise model.
/// lambda and residual are reported on the scale of -d sigma / d r_i, with
/// residual normalised by lambda (a relative KKT violation). tol is the
/// relative width at which the lambda bisection stops.
inline AllocationResult allocate_theorem1(const LinearClassifier& clf, const NoiseModel& nm, double budget,
                                          double tol = 1e-15) {
  AllocationResult res = detail::water_fill(clf.weights, nm, budget, tol);
  const double sigma = sigma_aggregate(clf, res.r, nm);
  // -d sigma/d r_i = m_i / (2 sigma)
  const double to_sigma = sigma > 0.0 ? 1.0 / (2.0 * sigma) : 0.0;
  const double lam_sigma = res.lambda * to_sigma;
  res.residual = lam_sigma > 0.0 ? res.residual * to_sigma / lam_sigma : res.residual;
  res.lambda = lam_sigma;
  return res;
}

/// Allocation that minimises the ellipsoid support term
/// sup_{delta in N0} w^T delta = sqrt(sum_i w_i^2 sigma_i^2(r_i)).
/// lambda is the common value of -w_i^2 sigma_i(r_i) sigma_i'(r_i).
inline AllocationResult allocate_adversarial(const LinearClassifier& clf, const NoiseModel& nm, double budget,
                                             double tol = 1e-15) {
  AllocationResult res = detail::water_fill(clf.weights, nm, budget, tol);
  res.lambda *= 0.5;
  const double lam = res.lambda;
  res.residual = lam > 0.0 ? 0.5 * res.residual / lam : res.residual;
  return res;
}

/// r_i = R |w_i| / |w|_1, optimal when sigma_i = 1 / sqrt(r_i).
inline ResourceVector allocate_inverse_sqrt(const LinearClassifier& clf, double budget) {
  detail::require_nonzero(clf.weights);
  require(budget > 0.0, ErrorKind::Argument, "budget must be positive");
  const Vector a = clf.weights.cwiseAbs();
  const double l1 = a.sum();
  Vector r = (budget * a.array() / l1).matrix();
  return ResourceVector(r, budget);
}

/// r_i = R |w_i|^(2/3) / sum_j |w_j|^(2/3), optimal when sigma_i = 1 / r_i.
inline ResourceVector allocate_inverse(const LinearClassifier& clf, double budget) {
  detail::require_nonzero(clf.weights);
  require(budget > 0.0, ErrorKind::Argument, "budget must be positive");
  Vector p(clf.weights.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::cbrt(clf.weights[i] * clf.weights[i]);
  const double total = p.sum();
  Vector r = (budget * p.array() / total).matrix();
  return ResourceVector(r, budget);
}

/// Real-relaxed bit allocation for sigma_i = 2^-r_i with r_i >= 1.
///
/// Funded features get r_i = 1 + log2|w_i| - lambda with
/// lambda = (sum_{C} log2|w_i| - R + d) / |C|, C = {i : log2|w_i| >= lambda}.
/// C is found by fixed-point iteration from all nonzero weights; dropping a
/// feature below the threshold only raises lambda, so the iteration is
/// monotone. Zero weights keep the single mandatory bit.
inline AllocationResult allocate_quantization(const LinearClassifier& clf, double budget) {
  const Vector& w = clf.weights;
  detail::require_nonzero(w);
  const auto d = static_cast<double>(w.size());
  require(budget >= d, ErrorKind::BudgetTooSmall, "bit budget must allow at least one bit per feature");

  std::vector<std::size_t> c;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) c.push_back(static_cast<std::size_t>(i));

  auto level = [&](const std::vector<std::size_t>& set) {
    double s = 0.0;
    for (auto i : set) s += std::log2(std::abs(w[static_cast<Eigen::Index>(i)]));
    return (s - budget + d) / static_cast<double>(set.size());
  };

  double lambda = level(c);
  for (;;) {
    std::vector<std::size_t> next;
    for (auto i : c)
      if (std::log2(std::abs(w[static_cast<Eigen::Index>(i)])) >= lambda) next.push_back(i);
    if (next.size() == c.size()) break;
    c = std::move(next);
    lambda = level(c);
  }

  Vector r = Vector::Ones(w.size());
  for (auto i : c) r[static_cast<Eigen::Index>(i)] = 1.0 + std::log2(std::abs(w[static_cast<Eigen::Index>(i)])) - lambda;
  AllocationResult out{ResourceVector(r, budget), lambda, c, std::abs(r.sum() - budget)};
  return out;
}

namespace detail {

inline double quantization_objective(const Vector& w, const Vector& r) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += w[i] * w[i] * std::exp2(-2.0 * r[i]);
  return s;
}

}  // namespace detail

/// Integer bit allocation near a relaxed solution: every combination of
/// integers within one bit of floor/ceil of each relaxed entry (and >= 1) is
/// tried; the feasible one (sum <= R) with the smallest sigma wins, ties
/// going to the lexicographically smallest vector. When that enumeration
/// would exceed 2^20 candidates a greedy marginal-gain fill is used instead,
/// which is exact for this separable convex objective.
inline ResourceVector refine_integer_bits(const AllocationResult& relaxed, const LinearClassifier& clf,
                                          double budget) {
  const Vector& w = clf.weights;
  const Vector& rr = relaxed.r.values();
  require(rr.size() == w.size(), ErrorKind::Argument, "relaxed allocation and classifier dimensions differ");
  const auto d = static_cast<std::size_t>(w.size());
  const double cap = std::floor(budget + 1e-9);
  require(cap >= static_cast<double>(d), ErrorKind::BudgetTooSmall, "bit budget must allow one bit per feature");

  std::vector<std::vector<double>> cand(d);
  double combos = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double v = rr[static_cast<Eigen::Index>(i)];
    const double lo = std::max(1.0, std::floor(v + 1e-9) - 1.0);
    const double hi = std::max(lo, std::ceil(v - 1e-9) + 1.0);
    for (double k = lo; k <= hi; k += 1.0) cand[i].push_back(k);
    combos *= static_cast<double>(cand[i].size());
  }

  if (combos <= static_cast<double>(1 << 20)) {
    Vector cur(w.size());
    Vector best;
    double best_val = kInf;
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
      for (std::size_t i = 0; i < d; ++i) cur[static_cast<Eigen::Index>(i)] = cand[i][idx[i]];
      if (cur.sum() <= cap) {
        const double v = detail::quantization_objective(w, cur);
        // Candidates are visited in lexicographic order, so strict < keeps
        // the lexicographically smallest among ties.
        if (v < best_val) {
          best_val = v;
          best = cur;
        }
      }
      std::size_t k = d;
      while (k > 0) {
        --k;
        if (++idx[k] < cand[k].size()) break;
        idx[k] = 0;
        if (k == 0) {
          k = d + 1;
          break;
        }
      }
      if (k == d + 1) break;
    }
    if (best.size() > 0) return ResourceVector(best, budget);
  }

  Vector r = Vector::Ones(w.size());
  for (double used = static_cast<double>(d); used + 1.0 <= cap; used += 1.0) {
    Eigen::Index pick = 0;
    double gain = -1.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double g = w[i] * w[i] * (std::exp2(-2.0 * r[i]) - std::exp2(-2.0 * (r[i] + 1.0)));
      if (g > gain) {
        gain = g;
        pick = i;
      }
    }
    r[pick] += 1.0;
  }
  return ResourceVector(r, budget);
}

/// Euclidean projection of v onto {r : sum r = R, r_i >= floor}.
inline Vector project_simplex_values(const Vector& v, double budget, double floor = 0.0) {
  const auto d = static_cast<double>(v.size());
  require(v.size() >= 1, ErrorKind::Argument, "empty vector");
  require(budget > d * floor, ErrorKind::InfeasibleSet, "budget does not exceed d * floor");
  if ((v.array() >= floor).all() && std::abs(v.sum() - budget) <= 4e-16 * budget * d) return v;

  const Vector u = v.array() - floor;
  const double target = budget - d * floor;
  std::vector<double> s(u.data(), u.data() + u.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    cumsum += s[j];
    const double t = (cumsum - target) / static_cast<double>(j + 1);
    if (s[j] - t > 0.0) tau = t;
  }
  Vector x = (u.array() - tau).max(0.0);
  // Large inputs leave cancellation error in tau; spread it over the support.
  for (int pass = 0; pass < 2; ++pass) {
    const double excess = x.sum() - target;
    const auto support = (x.array() > 0.0).count();
    if (support == 0 || excess == 0.0) break;
    const double shift = excess / static_cast<double>(support);
    for (auto& xi : x)
      if (xi > 0.0) xi = std::max(0.0, xi - shift);
  }
  return (x.array() + floor).matrix();
}

inline ResourceVector project_simplex(const Vector& v, double budget, double floor = 0.0) {
  Vector r = project_simplex_values(v, budget, floor);
  return ResourceVector(r, budget);
}

}  // namespace rcc
