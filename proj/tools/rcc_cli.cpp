// rcc: allocation, batch training, online runs and experiments from the shell.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rcc/analysis.hpp"
#include "rcc/experiment.hpp"
#include "rcc/online.hpp"
#include "rcc/oracle.hpp"
#include "rcc/rcc.hpp"

namespace {

using nlohmann::ordered_json;
using namespace rcc;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitOther = 1;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Argument: return kExitConfig;
    case ErrorKind::Data:
    case ErrorKind::Io: return kExitData;
    case ErrorKind::Divergence: return kExitDivergence;
    default: return kExitOther;
  }
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + path);
  f << text;
  require(static_cast<bool>(f), ErrorKind::Io, "write failed for " + path);
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string out;
  std::string format;
  bool full_scale = false;

  std::string format_or(const std::string& fallback) const { return format.empty() ? fallback : format; }
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_set = true; }, "random seed");
  sub->add_option("--out", c.out, "output path (default stdout)");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_flag("--full-scale", c.full_scale, "original sample sizes");
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

//------------------------------------------------------------------------------

struct AllocateArgs {
  std::vector<double> weights;
  double budget = 1.0;
  std::string family = "inverse-sqrt";
  std::vector<double> scale;
  std::string loss = "square";
  bool integer_bits = false;
};

int run_allocate(const AllocateArgs& a, const Common& c) {
  require(!a.weights.empty(), ErrorKind::Config, "--weights is required");
  const NoiseModel nm = NoiseModel::of_family(parse_noise_family(a.family), a.scale);
  const LinearClassifier clf{to_vector(a.weights), 0.0};
  AllocationResult res;
  if (nm.family() == NoiseFamily::QuantizationExp && a.scale.empty() && a.loss == "square")
    res = allocate_quantization(clf, a.budget);
  else if (a.loss == "hinge")
    res = allocate_adversarial(clf, nm, a.budget);
  else
    res = allocate_theorem1(clf, nm, a.budget);

  ordered_json j;
  j["r"] = to_std(res.r.values());
  j["lambda"] = res.lambda;
  j["funded_set"] = res.funded_set;
  j["kkt_residual"] = res.residual;
  j["sigma_aggregate"] = sigma_aggregate(clf, res.r, nm);
  j["sigma_aggregate_uniform"] = sigma_aggregate(clf, ResourceVector::uniform(clf.dims(), a.budget), nm);
  if (a.integer_bits) j["integer_bits"] = to_std(refine_integer_bits(res, clf, a.budget).values());
  if (c.format_or("json") == "csv") {
    std::ostringstream s;
    s << "feature,w,r\n";
    for (std::size_t i = 0; i < a.weights.size(); ++i)
      s << i << ',' << detail::format_double(a.weights[i]) << ',' << detail::format_double(res.r[i]) << '\n';
    write_text(c.out, s.str());
  } else {
    write_text(c.out, dump(j));
  }
  return kExitOk;
}

//------------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string loss = "hinge";
  double budget = 1.0;
  std::string family = "inverse-sqrt";
  int max_iter = 200;
  int inner = 2000;
  double tol = 1e-6;
};

int run_train_batch(const TrainArgs& a, const Common& c) {
  require(!a.data.empty(), ErrorKind::Config, "--data is required");
  const Dataset ds = read_dataset_csv(a.data);
  const NoiseModel nm = NoiseModel::of_family(parse_noise_family(a.family));
  SolveReport rep;
  if (a.loss == "square") {
    AlternatingOptions opt;
    opt.tol = a.tol;
    opt.max_iter = a.max_iter;
    rep = solve_square_alternating(ds, nm, a.budget, opt);
  } else {
    RobustHingeOptions opt;
    opt.tol = a.tol;
    opt.max_iter = a.max_iter;
    opt.schedule.inner_iterations = a.inner;
    rep = solve_robust_hinge(ds, nm, a.budget, opt);
  }
  ordered_json j;
  j["weights"] = to_std(rep.classifier.weights);
  j["bias"] = rep.classifier.bias;
  j["r"] = to_std(rep.allocation.r.values());
  j["objective"] = rep.objective_trace.back();
  j["objective_trace"] = rep.objective_trace;
  j["iterations"] = rep.iterations;
  j["converged"] = rep.converged;
  j["degenerate"] = rep.degenerate;
  j["separable_warning"] = rep.separable_warning;
  if (a.loss != "square") j["training_error"] = error_rate(ds, rep.classifier);
  write_text(c.out, dump(j));
  return kExitOk;
}

//------------------------------------------------------------------------------

AcquisitionMode parse_mode(const std::string& s) {
  if (s == "fresh") return AcquisitionMode::FreshNoise;
  if (s == "shared") return AcquisitionMode::SharedSample;
  if (s == "correlated") return AcquisitionMode::Correlated;
  fail(ErrorKind::Config, "unknown acquisition mode '" + s + "'");
}

ordered_json trace_json(const RegretTrace& tr, std::size_t every) {
  ordered_json j;
  j["rounds"] = tr.rounds.size();
  j["aborted"] = tr.aborted;
  if (tr.aborted) j["abort_reason"] = tr.abort_reason;
  j["cumulative_loss"] = tr.cumulative_loss;
  j["cumulative_clean_loss"] = tr.cumulative_clean_loss;
  j["final_w"] = to_std(tr.final_w);
  j["final_r"] = to_std(tr.final_r);
  ordered_json path = ordered_json::array();
  for (std::size_t t = 0; t < tr.rounds.size(); t += every) {
    const auto& r = tr.rounds[t];
    path.push_back({{"t", t + 1}, {"loss", r.loss}, {"w_norm", r.w_norm}, {"r", to_std(r.r)}});
  }
  j["path"] = path;
  return j;
}

std::string trace_csv(const RegretTrace& tr, std::size_t every) {
  std::ostringstream s;
  s << "t,loss,clean_loss,w_norm";
  if (!tr.rounds.empty())
    for (Eigen::Index i = 0; i < tr.rounds.front().r.size(); ++i) s << ",r" << i;
  s << '\n';
  for (std::size_t t = 0; t < tr.rounds.size(); t += every) {
    const auto& r = tr.rounds[t];
    s << t + 1 << ',' << detail::format_double(r.loss) << ',' << detail::format_double(r.clean_loss) << ','
      << detail::format_double(r.w_norm);
    for (Eigen::Index i = 0; i < r.r.size(); ++i) s << ',' << detail::format_double(r.r[i]);
    s << '\n';
  }
  return s.str();
}

struct OnlineArgs {
  long long every = 100;
};

int run_online(bool unknown, const OnlineArgs& a, const Common& c) {
  ExperimentConfig cfg = default_config(unknown ? ExperimentKind::OnlineUnknown : ExperimentKind::OnlineNoisy);
  if (!c.config.empty()) cfg = load_config(c.config, c.full_scale);
  if (c.seed_set) cfg.seed = c.seed;
  const OnlineSettings& s = cfg.online;
  const Vector w_true = to_vector(s.w_true);
  const NoiseModel nm = NoiseModel::of_family(cfg.family);

  OnlineConfig oc;
  oc.weight_cap = s.weight_cap;
  oc.budget = s.budget;
  oc.epsilon = s.epsilon;
  oc.horizon = s.horizon;
  oc.dims = static_cast<std::size_t>(w_true.size());

  GaussianNoiseOracle inner(linear_gaussian_sampler(w_true, s.label_sd, 1.0, s.feature_sd), nm, parse_mode(s.mode),
                            RngConfig{cfg.seed});
  RecordingOracle oracle(inner);
  RegretTrace tr;
  AllocationRule rule = AllocationRule::Efficient;
  if (unknown) {
    tr = alg1_run(oracle, oc);
  } else {
    if (s.rule == "uniform")
      rule = AllocationRule::Uniform;
    else
      require(s.rule == "efficient", ErrorKind::Config, "online rule must be uniform or efficient");
    tr = alg2_run(oracle, oc, rule, nm);
  }
  const std::size_t every = static_cast<std::size_t>(std::max(1LL, a.every));
  if (c.format_or("json") == "csv") {
    write_text(c.out, trace_csv(tr, every));
  } else {
    ordered_json j = trace_json(tr, every);
    j["measured_bx2"] = oracle.mean_x2();
    j["measured_bx4"] = oracle.mean_x4();
    if (!unknown) {
      const auto b = alg2_bounds(oc, oc.dims, oracle.mean_x4(), rule);
      j["bound_g"] = b.g;
      j["regret_bound"] = b.regret;
    }
    write_text(c.out, dump(j));
  }
  if (tr.aborted) fail(ErrorKind::Divergence, "online run aborted: " + tr.abort_reason);
  return kExitOk;
}

//------------------------------------------------------------------------------

struct ExperimentArgs {
  std::string kind;
  std::string data;
  int threads = -1;
};

int run_experiment_cmd(const ExperimentArgs& a, const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config, c.full_scale);
  } else {
    require(!a.kind.empty(), ErrorKind::Config, "--kind or --config is required");
    cfg = default_config(parse_experiment_kind(a.kind), c.full_scale);
  }
  if (!a.data.empty()) cfg.data_path = a.data;
  if (c.seed_set) cfg.seed = c.seed;
  if (a.threads >= 0) cfg.threads = static_cast<unsigned>(a.threads);
  const std::string out = c.out.empty() ? cfg.output : c.out;
  const OutputFormat fmt = parse_output_format(c.format_or("csv"));

  const ExperimentOutput res = run_experiment(cfg);
  if (out.empty() || out == "-")
    std::cout << (fmt == OutputFormat::Csv ? results_to_csv(res.table) : results_to_json(res.table).dump(2) + "\n");
  else
    emit_results(res.table, out, fmt);

  if (cfg.kind != ExperimentKind::SyntheticSweep) {
    const auto s = matched_ratio_summary(res.table, kRuleUniform, kRuleOptimal);
    if (s.median) std::cerr << "matched-error budget ratio (median): " << *s.median << '\n';
  }
  int diverged = 0;
  for (const auto& r : res.table.rows) diverged += r.diverged;
  if (diverged > 0) {
    std::cerr << diverged << " solver runs diverged\n";
    return kExitDivergence;
  }
  return kExitOk;
}

//------------------------------------------------------------------------------

struct AnalyzeArgs {
  std::vector<double> weights;
  std::string results;
  std::string uniform_rule = kRuleUniform;
  std::string optimal_rule = kRuleOptimal;
};

int run_analyze(const AnalyzeArgs& a, const Common& c) {
  ordered_json j;
  if (!a.weights.empty()) {
    const Vector w = to_vector(a.weights);
    j["ratio_theorem2"] = ratio_theorem2(w);
    j["noise_term_uniform_unit_budget"] = static_cast<double>(w.size()) * w.squaredNorm();
    j["noise_term_optimal_unit_budget"] = w.lpNorm<1>() * w.lpNorm<1>();
  }
  if (!a.results.empty()) {
    const ResultTable t = read_results_csv(a.results);
    const auto s = matched_ratio_summary(t, a.uniform_rule, a.optimal_rule);
    ordered_json levels = ordered_json::array();
    for (const auto& [lvl, ratio] : s.by_level) levels.push_back({{"error", lvl}, {"ratio", ratio}});
    j["matched_levels"] = levels;
    if (s.median) j["median_ratio"] = *s.median;
  }
  require(!j.is_null(), ErrorKind::Config, "give --weights and/or --results");
  write_text(c.out, dump(j));
  return kExitOk;
}

//------------------------------------------------------------------------------

struct OracleArgs {
  int cases = 20;
};

int run_oracle_check(const OracleArgs& a, const Common& c) {
  Engine eng = RngConfig{c.seed}.stream("oracle-check");
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 4);
  const NoiseFamily fams[2] = {NoiseFamily::InverseSqrtResource, NoiseFamily::InverseResource};
  double worst_alloc = 0.0;
  double worst_proj = 0.0;
  for (int k = 0; k < a.cases; ++k) {
    const int d = dim(eng);
    Vector w(d);
    for (auto& v : w) v = unif(eng);
    const NoiseModel nm = NoiseModel::of_family(fams[k % 2]);
    const double budget = 1.0;
    const auto fast = allocate_theorem1(LinearClassifier{w, 0.0}, nm, budget);
    oracle::GridSpec g;
    g.budget = budget;
    g.offset = nm.floor(budget);
    g.resolution = (budget - static_cast<double>(d) * g.offset) / 1000.0;
    const ResourceVector slow = oracle::grid_alloc_search(w, nm, g);
    const LinearClassifier clf{w, 0.0};
    worst_alloc = std::max(worst_alloc, sigma_aggregate(clf, fast.r, nm) - sigma_aggregate(clf, slow, nm));

    Vector v(d);
    for (auto& x : v) x = 3.0 * unif(eng);
    worst_proj = std::max(worst_proj, (project_simplex_values(v, 2.0, 0.01) - oracle::qp_project_simplex(v, 2.0, 0.01))
                                          .lpNorm<Eigen::Infinity>());
    worst_proj = std::max(worst_proj, (project_l1_ball(v, 1.0) - oracle::qp_project_l1(v, 1.0)).lpNorm<Eigen::Infinity>());
    worst_proj = std::max(worst_proj, (project_l2_ball(v, 1.0) - oracle::qp_project_l2(v, 1.0)).lpNorm<Eigen::Infinity>());
  }
  const bool ok = worst_alloc <= 1e-4 && worst_proj <= 1e-9;
  ordered_json j;
  j["cases"] = a.cases;
  j["allocation_excess_over_grid"] = worst_alloc;
  j["projection_max_abs_diff"] = worst_proj;
  j["pass"] = ok;
  write_text(c.out, dump(j));
  return ok ? kExitOk : kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resource-constrained classification tools"};
  app.require_subcommand(1);

  Common common;
  AllocateArgs alloc_args;
  auto* alloc = app.add_subcommand("allocate", "optimal resource allocation for a fixed classifier");
  add_common(alloc, common);
  alloc->add_option("--weights", alloc_args.weights, "classifier weights")->delimiter(',');
  alloc->add_option("--budget", alloc_args.budget, "total resources R")->check(CLI::PositiveNumber);
  alloc->add_option("--family", alloc_args.family, "inverse, inverse-sqrt or quantization");
  alloc->add_option("--scale", alloc_args.scale, "per-feature noise scale")->delimiter(',');
  alloc->add_option("--loss", alloc_args.loss, "square or hinge")->check(CLI::IsMember({"square", "hinge"}));
  alloc->add_flag("--integer-bits", alloc_args.integer_bits, "also report an integer bit allocation");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train-batch", "joint classifier and allocation from a CSV dataset");
  add_common(train, common);
  train->add_option("--data", train_args.data, "CSV with feature columns and a label column")->check(CLI::ExistingFile);
  train->add_option("--loss", train_args.loss, "square or hinge")->check(CLI::IsMember({"square", "hinge"}));
  train->add_option("--budget", train_args.budget, "total resources R")->check(CLI::PositiveNumber);
  train->add_option("--family", train_args.family, "noise family");
  train->add_option("--max-iter", train_args.max_iter, "outer rounds");
  train->add_option("--inner", train_args.inner, "subgradient steps per round");
  train->add_option("--tol", train_args.tol, "relative stall tolerance");

  OnlineArgs online_args;
  auto* unknown = app.add_subcommand("online-unknown", "online learning with unknown disturbance");
  add_common(unknown, common);
  unknown->add_option("--every", online_args.every, "record every k-th round");
  auto* noisy = app.add_subcommand("online-noisy", "online learning from noisy data");
  add_common(noisy, common);
  noisy->add_option("--every", online_args.every, "record every k-th round");

  ExperimentArgs exp_args;
  auto* exp = app.add_subcommand("experiment", "cross-validated error-rate experiment");
  add_common(exp, common);
  exp->add_option("--kind", exp_args.kind, "synthetic, synthetic-sweep, skin or breast");
  exp->add_option("--data", exp_args.data, "UCI data file");
  exp->add_option("--threads", exp_args.threads, "worker threads (0 = hardware)");

  AnalyzeArgs an_args;
  auto* analyze = app.add_subcommand("analyze", "budget ratios from weights or from a result table");
  add_common(analyze, common);
  analyze->add_option("--weights", an_args.weights, "classifier weights")->delimiter(',');
  analyze->add_option("--results", an_args.results, "result CSV")->check(CLI::ExistingFile);
  analyze->add_option("--uniform-rule", an_args.uniform_rule, "rule name of the uniform curve");
  analyze->add_option("--optimal-rule", an_args.optimal_rule, "rule name of the optimal curve");

  OracleArgs or_args;
  auto* orc = app.add_subcommand("oracle-check", "compare solvers with brute-force references");
  add_common(orc, common);
  orc->add_option("--cases", or_args.cases, "random cases")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*alloc) return run_allocate(alloc_args, common);
    if (*train) return run_train_batch(train_args, common);
    if (*unknown) return run_online(true, online_args, common);
    if (*noisy) return run_online(false, online_args, common);
    if (*exp) return run_experiment_cmd(exp_args, common);
    if (*analyze) return run_analyze(an_args, common);
    if (*orc) return run_oracle_check(or_args, common);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
