#pragma once

// Cross-validated error-rate experiments: uniform vs optimal allocation.

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rcc/allocation.hpp"
#include "rcc/batch_solver.hpp"
#include "rcc/io.hpp"
#include "rcc/losses.hpp"

namespace rcc {

enum class ExperimentKind { Synthetic, SyntheticSweep, Skin, Breast, OnlineUnknown, OnlineNoisy };

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "synthetic") return ExperimentKind::Synthetic;
  if (s == "synthetic-sweep") return ExperimentKind::SyntheticSweep;
  if (s == "skin") return ExperimentKind::Skin;
  if (s == "breast") return ExperimentKind::Breast;
  if (s == "online-unknown") return ExperimentKind::OnlineUnknown;
  if (s == "online-noisy") return ExperimentKind::OnlineNoisy;
  fail(ErrorKind::Config, "unknown experiment kind '" + s + "'");
}

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Synthetic: return "synthetic";
    case ExperimentKind::SyntheticSweep: return "synthetic-sweep";
    case ExperimentKind::Skin: return "skin";
    case ExperimentKind::Breast: return "breast";
    case ExperimentKind::OnlineUnknown: return "online-unknown";
    case ExperimentKind::OnlineNoisy: return "online-noisy";
  }
  return "?";
}

/// Settings for the online demo runs.
struct OnlineSettings {
  long long horizon = 10000;
  double epsilon = 0.1;
  double weight_cap = 10.0;
  double budget = 9.0;
  std::vector<double> w_true{1.0, 7.0, 1.0};
  double label_sd = 0.0;
  double feature_sd = 0.0;  ///< 0 = 1/sqrt(d)
  std::string rule = "efficient";
  std::string mode = "fresh";
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Synthetic;
  std::vector<double> budgets;
  int folds = 10;
  std::uint64_t seed = 1;
  NoiseFamily family = NoiseFamily::InverseSqrtResource;
  /// Test noise is N(0, noise_scale * sigma_i) in sd, or in variance when
  /// noise_scale_is_variance is set.
  double noise_scale = 1.0 / 3.0;
  bool noise_scale_is_variance = false;

  long long samples = 24000;     ///< synthetic pool size
  long long train_size = 2000;   ///< 0 = every sample outside the test fold
  long long subsample = 0;       ///< 0 = keep every row of a UCI file
  double divider = 7.0;
  std::vector<double> sweep{1, 2, 3, 4, 5, 6, 7, 8, 9};
  double label_noise_sd = 0.05;
  std::string data_path;
  bool normalize = false;

  StepSchedule schedule{};
  double tol = 1e-6;
  int max_iter = 200;

  std::string output;
  OutputFormat format = OutputFormat::Csv;
  unsigned threads = 0;
  OnlineSettings online;

  void validate() const {
    require(!budgets.empty(), ErrorKind::Config, "budget grid is empty");
    for (double r : budgets) require(std::isfinite(r) && r > 0.0, ErrorKind::Config, "budgets must be positive");
    require(folds >= 2, ErrorKind::Config, "need at least two folds");
    require(noise_scale >= 0.0, ErrorKind::Config, "noise scale must be nonnegative");
    require(train_size >= 0 && subsample >= 0, ErrorKind::Config, "sizes must be nonnegative");
    require(schedule.c > 0.0 && schedule.inner_iterations >= 1, ErrorKind::Config, "invalid step schedule");
    if (kind == ExperimentKind::Skin || kind == ExperimentKind::Breast) {
      require(!data_path.empty(), ErrorKind::Config, "data path is required for UCI experiments");
      require(std::filesystem::exists(data_path), ErrorKind::Config, "data file not found: " + data_path);
    }
    if (kind == ExperimentKind::Synthetic || kind == ExperimentKind::SyntheticSweep)
      require(samples >= folds, ErrorKind::Config, "fewer samples than folds");
    if (kind == ExperimentKind::SyntheticSweep)
      require(!sweep.empty(), ErrorKind::Config, "sweep list is empty");
  }
};

inline std::vector<double> geometric_grid(double lo, double hi, double factor) {
  std::vector<double> g;
  for (double r = lo; r <= hi * (1.0 + 1e-12); r *= factor) g.push_back(r);
  return g;
}

/// Desk-scale defaults per experiment kind; full_scale switches to the
/// original sample sizes.
inline ExperimentConfig default_config(ExperimentKind kind, bool full_scale = false) {
  ExperimentConfig c;
  c.kind = kind;
  c.budgets = geometric_grid(0.25, 256.0, 2.0);
  c.schedule.inner_iterations = full_scale ? 2000 : 1000;
  c.max_iter = full_scale ? 200 : 20;
  switch (kind) {
    case ExperimentKind::Synthetic:
    case ExperimentKind::SyntheticSweep:
      c.samples = full_scale ? 240000 : 24000;
      c.train_size = full_scale ? 10000 : 2000;
      break;
    case ExperimentKind::Skin:
      c.subsample = full_scale ? 0 : 24506;
      c.train_size = full_scale ? 10000 : 5000;
      c.normalize = true;
      break;
    case ExperimentKind::OnlineUnknown:
      c.online.budget = 18.0;
      c.online.epsilon = 0.2;
      c.online.feature_sd = 2.0;
      c.online.mode = "correlated";
      break;
    case ExperimentKind::Breast:
      c.folds = 3;
      c.train_size = 0;
      c.normalize = true;
      break;
    default: break;
  }
  return c;
}

namespace detail {

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size()) fail(ErrorKind::Config, "bad number '" + tok + "' in list");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Reads an INI-style config:
///
///   [experiment]  kind, seed, folds, budgets (list) or budget_min/max/factor
///   [data]        path, samples, train_size, subsample, divider, sweep, label_noise_sd, normalize
///   [noise]       family, scale, scale_is_variance
///   [solver]      step_c, inner_iterations, tol, max_iter
///   [online]      horizon, epsilon, weight_cap, budget, w_true, label_sd, feature_sd, rule, mode
///   [output]      path, format
///
/// Relative data paths resolve against the config file's directory.
inline ExperimentConfig load_config(const std::string& path, bool full_scale = false) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, std::string("config parse error: ") + e.what());
  }
  try {
    const auto kind = parse_experiment_kind(tree.get<std::string>("experiment.kind"));
    ExperimentConfig c = default_config(kind, full_scale);
    c.seed = tree.get<std::uint64_t>("experiment.seed", c.seed);
    c.folds = tree.get<int>("experiment.folds", c.folds);
    if (auto b = tree.get_optional<std::string>("experiment.budgets")) {
      c.budgets = detail::parse_list(*b);
    } else if (tree.get_optional<double>("experiment.budget_min")) {
      c.budgets = geometric_grid(tree.get<double>("experiment.budget_min"), tree.get<double>("experiment.budget_max"),
                                 tree.get<double>("experiment.budget_factor", 2.0));
    }
    c.threads = tree.get<unsigned>("experiment.threads", c.threads);

    if (auto p = tree.get_optional<std::string>("data.path")) {
      std::filesystem::path dp(*p);
      if (dp.is_relative()) dp = std::filesystem::path(path).parent_path() / dp;
      c.data_path = dp.string();
    }
    if (!full_scale) {
      c.samples = tree.get<long long>("data.samples", c.samples);
      c.train_size = tree.get<long long>("data.train_size", c.train_size);
      c.subsample = tree.get<long long>("data.subsample", c.subsample);
    }
    c.divider = tree.get<double>("data.divider", c.divider);
    if (auto s = tree.get_optional<std::string>("data.sweep")) c.sweep = detail::parse_list(*s);
    c.label_noise_sd = tree.get<double>("data.label_noise_sd", c.label_noise_sd);
    c.normalize = tree.get<bool>("data.normalize", c.normalize);

    if (auto f = tree.get_optional<std::string>("noise.family")) c.family = parse_noise_family(*f);
    require(c.family != NoiseFamily::CustomTabulated, ErrorKind::Config,
            "experiments support the built-in noise families only");
    c.noise_scale = tree.get<double>("noise.scale", c.noise_scale);
    c.noise_scale_is_variance = tree.get<bool>("noise.scale_is_variance", c.noise_scale_is_variance);

    c.schedule.c = tree.get<double>("solver.step_c", c.schedule.c);
    c.schedule.inner_iterations = tree.get<int>("solver.inner_iterations", c.schedule.inner_iterations);
    c.tol = tree.get<double>("solver.tol", c.tol);
    c.max_iter = tree.get<int>("solver.max_iter", c.max_iter);

    c.online.horizon = tree.get<long long>("online.horizon", c.online.horizon);
    c.online.epsilon = tree.get<double>("online.epsilon", c.online.epsilon);
    c.online.weight_cap = tree.get<double>("online.weight_cap", c.online.weight_cap);
    c.online.budget = tree.get<double>("online.budget", c.online.budget);
    if (auto w = tree.get_optional<std::string>("online.w_true")) c.online.w_true = detail::parse_list(*w);
    c.online.label_sd = tree.get<double>("online.label_sd", c.online.label_sd);
    c.online.feature_sd = tree.get<double>("online.feature_sd", c.online.feature_sd);
    c.online.rule = tree.get<std::string>("online.rule", c.online.rule);
    c.online.mode = tree.get<std::string>("online.mode", c.online.mode);

    c.output = tree.get<std::string>("output.path", c.output);
    if (auto f = tree.get_optional<std::string>("output.format")) c.format = parse_output_format(*f);
    if (c.kind != ExperimentKind::OnlineUnknown && c.kind != ExperimentKind::OnlineNoisy) c.validate();
    return c;
  } catch (const pt::ptree_error& e) {
    fail(ErrorKind::Config, std::string("config error: ") + e.what());
  }
}

//------------------------------------------------------------------------------
// Running
//------------------------------------------------------------------------------

inline constexpr const char* kRuleUniform = "uniform";
inline constexpr const char* kRuleOptimal = "optimal";
inline constexpr const char* kRuleZeroNoise = "zero-noise-optimal";

/// Per-solve record used to audit the alternating solvers.
struct SolveAudit {
  std::string rule;
  double budget = 0.0;
  int fold = 0;
  bool nonincreasing = true;
  double max_increase = 0.0;
  bool converged = false;
  bool separable_warning = false;
};

struct ExperimentOutput {
  ResultTable table;
  std::vector<SolveAudit> audits;
};

inline SolveAudit audit_trace(const std::vector<double>& trace) {
  SolveAudit a;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double inc = trace[k] - trace[k - 1];
    a.max_increase = std::max(a.max_increase, inc);
    if (inc > 1e-10) a.nonincreasing = false;
  }
  return a;
}

/// Noise added to the test features: sd = scale * sigma_i(r_i) or
/// sqrt(scale * sigma_i(r_i)) in variance mode.
inline Vector test_noise_sd(const ResourceVector& r, const NoiseModel& nm, const ExperimentConfig& cfg) {
  Vector sd = noise_sd(r, nm, 1.0);
  if (cfg.noise_scale_is_variance) return (cfg.noise_scale * sd.array()).sqrt().matrix();
  return cfg.noise_scale * sd;
}

/// Pool of samples for one experiment (one divider for sweeps).
inline Dataset load_experiment_data(const ExperimentConfig& cfg, double divider) {
  const RngConfig rng{cfg.seed};
  switch (cfg.kind) {
    case ExperimentKind::Synthetic:
    case ExperimentKind::SyntheticSweep:
      return generate_synthetic(divider, cfg.samples, cfg.label_noise_sd,
                                rng.child("synthetic", static_cast<std::uint64_t>(std::llround(divider * 1000.0))));
    case ExperimentKind::Skin:
    case ExperimentKind::Breast: {
      Dataset ds = ingest_uci(cfg.data_path, cfg.kind == ExperimentKind::Skin ? UciKind::Skin : UciKind::Breast);
      if (cfg.subsample > 0 && cfg.subsample < static_cast<long long>(ds.samples())) {
        std::vector<std::size_t> idx(ds.samples());
        std::iota(idx.begin(), idx.end(), 0);
        auto eng = rng.stream("subsample");
        std::shuffle(idx.begin(), idx.end(), eng);
        idx.resize(static_cast<std::size_t>(cfg.subsample));
        std::sort(idx.begin(), idx.end());
        ds = ds.subset(idx);
      }
      return ds;
    }
    default: fail(ErrorKind::Config, "not a cross-validated experiment kind");
  }
}

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Disjoint folds from one seeded permutation. Fold k is the test set;
/// training uses the first train_size samples of the remaining permuted
/// order (all of them when train_size is 0).
inline std::vector<FoldSplit> make_folds(std::size_t n, int folds, long long train_size, const RngConfig& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto eng = rng.stream("folds");
  std::shuffle(perm.begin(), perm.end(), eng);
  std::vector<FoldSplit> out(static_cast<std::size_t>(folds));
  const auto k = static_cast<std::size_t>(folds);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k;
    const std::size_t hi = (f + 1) * n / k;
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= lo && i < hi)
        out[f].test.push_back(perm[i]);
      else if (train_size == 0 || out[f].train.size() < static_cast<std::size_t>(train_size))
        out[f].train.push_back(perm[i]);
    }
  }
  return out;
}

namespace detail {

struct FoldResult {
  // [budget index][rule index] -> error rate, NaN when the solver diverged
  std::vector<std::array<double, 3>> errors;
  std::vector<SolveAudit> audits;
};

inline FoldResult run_fold(const Dataset& pool, const FoldSplit& split, const ExperimentConfig& cfg,
                           const NoiseModel& nm, int fold, std::uint64_t tag) {
  Dataset train = pool.subset(split.train);
  Dataset test = pool.subset(split.test);
  if (cfg.normalize) {
    const AffineNormalizer norm = AffineNormalizer::fit(train);
    train = norm.apply(train);
    test = norm.apply(test);
  }
  const RngConfig rng = RngConfig{cfg.seed}.child("fold", tag * 1000 + static_cast<std::uint64_t>(fold));
  const LinearClassifier warm = plain_hinge_warm_start(train, cfg.schedule);
  const auto d = train.dims();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  FoldResult out;
  out.errors.assign(cfg.budgets.size(), {nan, nan, nan});
  for (std::size_t b = 0; b < cfg.budgets.size(); ++b) {
    const double budget = cfg.budgets[b];
    auto eng = rng.stream("test-noise", b);
    const Matrix z = standard_normal_matrix(test.features.rows(), test.features.cols(), eng);
    auto evaluate = [&](const LinearClassifier& clf, const ResourceVector& r) {
      Dataset noisy = test;
      const Vector sd = test_noise_sd(r, nm, cfg);
      noisy.features += (z.array().rowwise() * sd.transpose().array()).matrix();
      return error_rate(noisy, clf);
    };

    try {
      const ResourceVector ru = ResourceVector::uniform(d, budget);
      const InnerResult fit = fit_robust_hinge_fixed(train, ru, nm, warm, cfg.schedule);
      out.errors[b][0] = evaluate(fit.classifier, ru);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Divergence) throw;
    }
    try {
      RobustHingeOptions opt;
      opt.schedule = cfg.schedule;
      opt.tol = cfg.tol;
      opt.max_iter = cfg.max_iter;
      opt.warm_start = warm;
      const SolveReport rep = solve_robust_hinge(train, nm, budget, opt);
      SolveAudit a = audit_trace(rep.objective_trace);
      a.rule = kRuleOptimal;
      a.budget = budget;
      a.fold = fold;
      a.converged = rep.converged;
      a.separable_warning = rep.separable_warning;
      out.audits.push_back(a);
      out.errors[b][1] = evaluate(rep.classifier, rep.allocation.r);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Divergence) throw;
    }
    if (!warm.is_zero()) {
      const AllocationResult a0 = allocate_adversarial(warm, nm, budget);
      out.errors[b][2] = evaluate(warm, a0.r);
    }
  }
  return out;
}

template <typename Job>
void run_parallel(std::size_t n_jobs, unsigned threads, Job job) {
  unsigned n = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, n_jobs));
  if (n <= 1) {
    for (std::size_t j = 0; j < n_jobs; ++j) job(j);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t j = 0;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= n_jobs || first_error) return;
          j = next++;
        }
        try {
          job(j);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

/// Runs every fold and budget under the three regimes:
///   uniform             uniform allocation, classifier trained for it
///   optimal             joint robust-hinge solve (classifier and allocation)
///   zero-noise-optimal  clean-data classifier with the allocation optimal for it
/// Test features get independent Gaussian noise, shared across the three
/// regimes for a given fold and budget. Rows are ordered by (divider,
/// budget, rule) independent of thread scheduling.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.kind != ExperimentKind::OnlineUnknown && cfg.kind != ExperimentKind::OnlineNoisy, ErrorKind::Config,
          "online kinds are run by the online subcommands");
  const NoiseModel nm = NoiseModel::of_family(cfg.family);
  const bool sweep = cfg.kind == ExperimentKind::SyntheticSweep;
  const std::vector<double> dividers = sweep ? cfg.sweep : std::vector<double>{cfg.divider};

  struct Task {
    std::size_t divider;
    int fold;
  };
  std::vector<Dataset> pools;
  std::vector<std::vector<FoldSplit>> splits;
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < dividers.size(); ++a) {
    pools.push_back(load_experiment_data(cfg, dividers[a]));
    pools.back().validate(true);
    splits.push_back(make_folds(pools.back().samples(), cfg.folds, cfg.train_size, RngConfig{cfg.seed}.child("split", a)));
    for (int f = 0; f < cfg.folds; ++f) tasks.push_back({a, f});
  }

  std::vector<detail::FoldResult> results(tasks.size());
  detail::run_parallel(tasks.size(), cfg.threads, [&](std::size_t j) {
    const Task& t = tasks[j];
    results[j] = detail::run_fold(pools[t.divider], splits[t.divider][static_cast<std::size_t>(t.fold)], cfg, nm,
                                  t.fold, t.divider);
  });

  ExperimentOutput out;
  const char* rules[3] = {kRuleUniform, kRuleOptimal, kRuleZeroNoise};
  for (std::size_t a = 0; a < dividers.size(); ++a) {
    std::string prefix;
    if (sweep) {
      std::ostringstream p;
      p << "a=" << dividers[a] << ':';
      prefix = p.str();
    }
    for (std::size_t b = 0; b < cfg.budgets.size(); ++b) {
      for (int k = 0; k < 3; ++k) {
        std::vector<double> vals;
        int diverged = 0;
        for (std::size_t j = 0; j < tasks.size(); ++j) {
          if (tasks[j].divider != a) continue;
          const double e = results[j].errors[b][static_cast<std::size_t>(k)];
          if (std::isnan(e))
            ++diverged;
          else
            vals.push_back(e);
        }
        ResultRow row;
        row.budget = cfg.budgets[b];
        row.rule = prefix + rules[k];
        row.folds = static_cast<int>(vals.size());
        row.diverged = diverged;
        if (vals.empty()) {
          row.mean_error = row.sd_error = std::numeric_limits<double>::quiet_NaN();
        } else {
          const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
          double ss = 0.0;
          for (double v : vals) ss += (v - mean) * (v - mean);
          row.mean_error = mean;
          row.sd_error = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        }
        out.table.rows.push_back(std::move(row));
      }
    }
  }
  for (auto& r : results)
    for (auto& a : r.audits) out.audits.push_back(std::move(a));
  return out;
}

//------------------------------------------------------------------------------
// Matched-error comparison
//------------------------------------------------------------------------------

/// Budget at which a decreasing error curve first reaches `level`, by
/// interpolating log R linearly in log error between neighbouring grid
/// points. nullopt when the curve never brackets the level.
inline std::optional<double> budget_at_error(const std::vector<ResultRow>& curve, double level) {
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const double e0 = curve[k - 1].mean_error;
    const double e1 = curve[k].mean_error;
    if (!(std::isfinite(e0) && std::isfinite(e1))) continue;
    if (e0 >= level && e1 <= level) {
      const double l0 = std::log(curve[k - 1].budget);
      const double l1 = std::log(curve[k].budget);
      if (e0 == e1) return curve[k - 1].budget;
      double t = 0.0;
      if (e1 > 0.0 && level > 0.0)
        t = (std::log(e0) - std::log(level)) / (std::log(e0) - std::log(e1));
      else
        t = (e0 - level) / (e0 - e1);
      return std::exp(l0 + t * (l1 - l0));
    }
  }
  return std::nullopt;
}

/// R_uniform / R_optimal at one error level.
inline std::optional<double> matched_error_ratio(const ResultTable& t, const std::string& uniform_rule,
                                                 const std::string& optimal_rule, double level) {
  const auto ru = budget_at_error(t.for_rule(uniform_rule), level);
  const auto ro = budget_at_error(t.for_rule(optimal_rule), level);
  if (!ru || !ro) return std::nullopt;
  return *ru / *ro;
}

struct MatchedRatioSummary {
  std::vector<std::pair<double, double>> by_level;  ///< (error level, ratio)
  std::optional<double> median;
};

/// Ratios at `count` error levels spaced evenly in log error over the range
/// both curves cover (trimmed by 10% on each end), with their median.
inline MatchedRatioSummary matched_ratio_summary(const ResultTable& t, const std::string& uniform_rule,
                                                 const std::string& optimal_rule, int count = 5) {
  auto span = [](const std::vector<ResultRow>& c) {
    double lo = 1.0, hi = 0.0;
    for (const auto& r : c)
      if (std::isfinite(r.mean_error)) {
        lo = std::min(lo, r.mean_error);
        hi = std::max(hi, r.mean_error);
      }
    return std::make_pair(lo, hi);
  };
  const auto [ulo, uhi] = span(t.for_rule(uniform_rule));
  const auto [olo, ohi] = span(t.for_rule(optimal_rule));
  MatchedRatioSummary s;
  double lo = std::max({ulo, olo, 1e-4});
  double hi = std::min(uhi, ohi);
  if (!(hi > lo)) return s;
  const double llo = std::log(lo) + 0.1 * (std::log(hi) - std::log(lo));
  const double lhi = std::log(hi) - 0.1 * (std::log(hi) - std::log(lo));
  std::vector<double> ratios;
  for (int k = 0; k < count; ++k) {
    const double level = std::exp(count == 1 ? 0.5 * (llo + lhi) : llo + (lhi - llo) * k / (count - 1));
    if (auto r = matched_error_ratio(t, uniform_rule, optimal_rule, level)) {
      s.by_level.emplace_back(level, *r);
      ratios.push_back(*r);
    }
  }
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    const std::size_t m = ratios.size();
    s.median = m % 2 ? ratios[m / 2] : 0.5 * (ratios[m / 2 - 1] + ratios[m / 2]);
  }
  return s;
}

}  // namespace rcc
