#pragma once

// Brute-force and Monte-Carlo reference implementations. Each one is written
// from its defining formula with plain loops and shares no code with the
// solvers it checks. Enabled with RCC_WITH_ORACLES.

#if !defined(RCC_WITH_ORACLES)
#error "rcc/oracle.hpp requires RCC_WITH_ORACLES"
#endif

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "rcc/core_model.hpp"

namespace rcc::oracle {

struct GridSpec {
  double resolution = 1e-3;  ///< absolute lattice step
  double budget = 1.0;
  double max_points = 1e7;
  /// Lattice origin: r_i = offset + k_i * resolution.
  double offset = 0.0;
};

namespace detail {

// sum_i w_i^2 sigma_i(r_i)^2 evaluated term by term; sigma(0) is treated
// as infinite unless w_i is zero.
inline double naive_term(double wi, const NoiseModel& nm, std::size_t i, double r) {
  if (wi == 0.0) return 0.0;
  if (r <= 0.0) return std::numeric_limits<double>::infinity();
  const double s = nm.sigma(i, r);
  return wi * wi * s * s;
}

inline long long lattice_steps(const GridSpec& spec, std::size_t d) {
  require(spec.resolution > 0.0 && spec.budget > 0.0, ErrorKind::Argument, "grid needs positive step and budget");
  require(spec.offset >= 0.0, ErrorKind::Argument, "grid offset must be nonnegative");
  const double span = spec.budget - static_cast<double>(d) * spec.offset;
  require(span > 0.0, ErrorKind::Argument, "grid offset leaves no budget");
  const double n = std::round(span / spec.resolution);
  require(std::abs(n * spec.resolution - span) <= 1e-9 * spec.budget, ErrorKind::Argument,
          "budget minus the offsets must be a multiple of the grid step");
  return static_cast<long long>(n);
}

}  // namespace detail

/// Minimum of sigma(w, r) over the lattice {r = offset + k * step, sum r = R}.
///
/// The objective is a sum of per-feature terms, so the lattice minimum is
/// found exactly by a min-plus pass over features (d * N^2 work instead of
/// the N^(d-1) lattice points). Among equal minima the lexicographically
/// smallest k wins. Returns the allocation; fails when d > 4 or the work
/// exceeds max_points.
inline ResourceVector grid_alloc_search(const Vector& w, const NoiseModel& nm, const GridSpec& spec) {
  const auto d = static_cast<std::size_t>(w.size());
  require(d >= 1 && d <= 4, ErrorKind::Argument, "grid oracle supports 1 <= d <= 4");
  const long long n = detail::lattice_steps(spec, d);
  const double work = static_cast<double>(d) * static_cast<double>(n + 1) * static_cast<double>(n + 1);
  require(work <= spec.max_points, ErrorKind::Argument, "grid enumeration exceeds the point cap");

  const auto nn = static_cast<std::size_t>(n);
  // tail[i][m]: best sum over features i..d-1 using exactly m steps.
  std::vector<std::vector<double>> tail(d + 1, std::vector<double>(nn + 1, std::numeric_limits<double>::infinity()));
  tail[d][0] = 0.0;
  std::vector<std::vector<double>> term(d, std::vector<double>(nn + 1));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k <= nn; ++k)
      term[i][k] = detail::naive_term(w[static_cast<Eigen::Index>(i)], nm, i, spec.offset + static_cast<double>(k) * spec.resolution);
  for (std::size_t i = d; i-- > 0;) {
    for (std::size_t m = 0; m <= nn; ++m) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k <= m; ++k) best = std::min(best, term[i][k] + tail[i + 1][m - k]);
      tail[i][m] = best;
    }
  }
  // Walk forward choosing the smallest k that attains the optimum.
  Vector r(w.size());
  std::size_t left = nn;
  for (std::size_t i = 0; i < d; ++i) {
    const double target = tail[i][left];
    std::size_t pick = left;
    for (std::size_t k = 0; k <= left; ++k) {
      if (term[i][k] + tail[i + 1][left - k] == target) {
        pick = k;
        break;
      }
    }
    r[static_cast<Eigen::Index>(i)] = spec.offset + static_cast<double>(pick) * spec.resolution;
    left -= pick;
  }
  return ResourceVector(r, spec.budget);
}

/// Same lattice minimum by visiting every point. Only for small grids.
inline ResourceVector grid_alloc_enumerate(const Vector& w, const NoiseModel& nm, const GridSpec& spec) {
  const auto d = static_cast<std::size_t>(w.size());
  require(d >= 1 && d <= 4, ErrorKind::Argument, "grid oracle supports 1 <= d <= 4");
  const long long n = detail::lattice_steps(spec, d);
  double count = 1.0;
  for (std::size_t j = 1; j < d; ++j) count = count * static_cast<double>(n + static_cast<long long>(j)) / static_cast<double>(j);
  require(count <= spec.max_points, ErrorKind::Argument, "grid enumeration exceeds the point cap");

  std::vector<long long> k(d, 0);
  std::vector<long long> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, long long)> rec = [&](std::size_t i, long long left) {
    if (i + 1 == d) {
      k[i] = left;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        s += detail::naive_term(w[static_cast<Eigen::Index>(j)], nm, j, spec.offset + static_cast<double>(k[j]) * spec.resolution);
      if (s < best_val) {
        best_val = s;
        best = k;
      }
      return;
    }
    for (long long v = 0; v <= left; ++v) {
      k[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, n);
  Vector r(w.size());
  for (std::size_t j = 0; j < d; ++j) r[static_cast<Eigen::Index>(j)] = spec.offset + static_cast<double>(best[j]) * spec.resolution;
  return ResourceVector(r, spec.budget);
}

/// Integer bits r_i >= 1 with sum r_i <= floor(R) minimising
/// sum_i w_i^2 4^-r_i, by exhaustive enumeration; ties go to the
/// lexicographically smallest vector.
inline Vector exhaustive_integer_bits(const Vector& w, double budget) {
  const auto d = static_cast<std::size_t>(w.size());
  const auto cap = static_cast<long long>(std::floor(budget + 1e-9));
  require(cap >= static_cast<long long>(d), ErrorKind::BudgetTooSmall, "one bit per feature does not fit");
  std::vector<long long> k(d, 1);
  std::vector<long long> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, long long)> rec = [&](std::size_t i, long long used) {
    if (i == d) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += w[static_cast<Eigen::Index>(j)] * w[static_cast<Eigen::Index>(j)] * std::pow(4.0, -static_cast<double>(k[j]));
      if (s < best_val) {
        best_val = s;
        best = k;
      }
      return;
    }
    const long long reserve = static_cast<long long>(d - i - 1);
    for (long long v = 1; used + v + reserve <= cap; ++v) {
      k[i] = v;
      rec(i + 1, used + v);
    }
  };
  rec(0, 0);
  Vector r(w.size());
  for (std::size_t j = 0; j < d; ++j) r[static_cast<Eigen::Index>(j)] = static_cast<double>(best[j]);
  return r;
}

enum class LossKind { Square, Hinge };

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte-Carlo estimate of (1/M) sum_i E l(w, b, X_i + delta_i, Y_i) with
/// delta_ij ~ N(0, sigma_j(r_j)^2). Each draw perturbs every sample; the
/// standard error is taken across draws.
inline McEstimate mc_expected_loss(const Dataset& ds, const LinearClassifier& clf, const ResourceVector& r,
                                   const NoiseModel& nm, LossKind kind, std::size_t n_draws, Engine& eng) {
  require(n_draws >= 2, ErrorKind::Argument, "need at least two draws");
  const auto m = ds.features.rows();
  const auto d = ds.features.cols();
  std::vector<double> sd(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) sd[static_cast<std::size_t>(j)] = nm.sigma(static_cast<std::size_t>(j), r[static_cast<std::size_t>(j)]);
  std::normal_distribution<double> g(0.0, 1.0);
  double sum = 0.0;
  double sumsq = 0.0;
  for (std::size_t t = 0; t < n_draws; ++t) {
    double draw = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double f = clf.bias;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double wj = clf.weights[j];
        const double noise = sd[static_cast<std::size_t>(j)] > 0.0 ? sd[static_cast<std::size_t>(j)] * g(eng) : 0.0;
        f += wj * (ds.features(i, j) + noise);
      }
      const double y = ds.labels[i];
      if (kind == LossKind::Square) {
        draw += (y - f) * (y - f);
      } else {
        draw += std::max(0.0, 1.0 - y * f);
      }
    }
    draw /= static_cast<double>(m);
    sum += draw;
    sumsq += draw * draw;
  }
  const double nd = static_cast<double>(n_draws);
  const double mean = sum / nd;
  const double var = std::max(0.0, (sumsq - nd * mean * mean) / (nd - 1.0));
  McEstimate est;
  est.mean = mean;
  est.stderr_ = std::sqrt(var / nd);
  // Without noise every draw is identical; report the exact value.
  bool noiseless = true;
  for (double s : sd) noiseless = noiseless && s == 0.0;
  if (noiseless) est.stderr_ = 0.0;
  return est;
}

/// Largest w^T delta over n points delta = s .* u with u uniform on the unit
/// sphere (the boundary of the ellipsoid with semi-axes s).
inline double mc_ellipsoid_sup(const Vector& w, const Vector& semi_axes, std::size_t n, Engine& eng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto d = w.size();
  std::vector<double> u(static_cast<std::size_t>(d));
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    double norm2 = 0.0;
    for (auto& v : u) {
      v = g(eng);
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    double val = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) val += w[i] * semi_axes[i] * u[static_cast<std::size_t>(i)] * inv;
    best = std::max(best, val);
  }
  return best;
}

/// Central differences per coordinate.
inline Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  require(h > 0.0, ErrorKind::Argument, "finite-difference step must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// argmin |r - v|^2 over {sum r = R, r_i >= floor} by trying every set of
/// coordinates pinned at the floor and solving the equality-constrained
/// problem on the rest.
inline Vector qp_project_simplex(const Vector& v, double budget, double floor) {
  const auto d = static_cast<std::size_t>(v.size());
  require(d <= 20, ErrorKind::Argument, "active-set oracle limited to d <= 20");
  Vector best;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
    std::size_t free_count = 0;
    double free_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      if (!(mask & (1u << i))) {
        ++free_count;
        free_sum += v[static_cast<Eigen::Index>(i)];
      }
    if (free_count == 0) continue;
    const double pinned = static_cast<double>(d - free_count) * floor;
    const double shift = (budget - pinned - free_sum) / static_cast<double>(free_count);
    Vector r(v.size());
    bool ok = true;
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      r[ii] = (mask & (1u << i)) ? floor : v[ii] + shift;
      if (r[ii] < floor - 1e-14 * std::max(1.0, budget)) ok = false;
    }
    if (!ok) continue;
    double val = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = r[static_cast<Eigen::Index>(i)] - v[static_cast<Eigen::Index>(i)];
      val += diff * diff;
    }
    if (val < best_val) {
      best_val = val;
      best = r;
    }
  }
  return best;
}

/// argmin |u - v|^2 over {|u|_1 <= radius}: either v itself or, for every
/// support set S, u_S = sign(v_S)(|v_S| - tau) with the constraint tight.
inline Vector qp_project_l1(const Vector& v, double radius) {
  const auto d = static_cast<std::size_t>(v.size());
  require(d <= 20, ErrorKind::Argument, "active-set oracle limited to d <= 20");
  double l1 = 0.0;
  for (std::size_t i = 0; i < d; ++i) l1 += std::abs(v[static_cast<Eigen::Index>(i)]);
  if (l1 <= radius) return v;
  Vector best = Vector::Zero(v.size());
  double best_val = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    double s = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < d; ++i)
      if (mask & (1u << i)) {
        s += std::abs(v[static_cast<Eigen::Index>(i)]);
        ++count;
      }
    const double tau = (s - radius) / static_cast<double>(count);
    if (tau < 0.0) continue;
    Vector u = Vector::Zero(v.size());
    bool ok = true;
    for (std::size_t i = 0; i < d; ++i) {
      if (!(mask & (1u << i))) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double mag = std::abs(v[ii]) - tau;
      if (mag < 0.0) ok = false;
      u[ii] = v[ii] < 0.0 ? -mag : mag;
    }
    if (!ok) continue;
    double val = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = u[static_cast<Eigen::Index>(i)] - v[static_cast<Eigen::Index>(i)];
      val += diff * diff;
    }
    if (val < best_val) {
      best_val = val;
      best = u;
    }
  }
  return best;
}

/// argmin |u - v|^2 over {|u|_2 <= radius}: v when inside, otherwise the
/// stationary point of the tight constraint, u = v / (1 + mu) with
/// (1 + mu) = |v| / radius.
inline Vector qp_project_l2(const Vector& v, double radius) {
  double n2 = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) n2 += v[i] * v[i];
  if (n2 <= radius * radius) return v;
  const double one_plus_mu = std::sqrt(n2) / radius;
  Vector u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = v[i] / one_plus_mu;
  return u;
}

}  // namespace rcc::oracle
