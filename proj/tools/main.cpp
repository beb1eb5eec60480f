#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stratbound/analysis.hpp"
#include "stratbound/bootstrap.hpp"
#include "stratbound/demo_data.hpp"
#include "stratbound/diagnostics.hpp"
#include "stratbound/report.hpp"
#include "stratbound/simulation.hpp"

namespace {

using namespace stratbound;

// 0 ok; 2 usage/config; 3 file I/O or invalid input data; 4 analysis
// precondition; 5 internal.
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitInternal = 5;

struct OutputOptions {
  std::string out_dir = ".";
  std::string format = "pretty";
};

void add_output_options(CLI::App* cmd, OutputOptions* out) {
  cmd->add_option("--out-dir", out->out_dir, "directory for report files")
      ->capture_default_str();
  cmd->add_option("--format", out->format, "stdout rendering")
      ->check(CLI::IsMember({"pretty", "csv"}))
      ->capture_default_str();
}

struct InputOptions {
  std::string input;
  double prob_treat = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> aliases;  // token=category
};

void add_input_options(CLI::App* cmd, InputOptions* in) {
  cmd->add_option("--input", in->input, "input CSV file")->required();
  cmd->add_option("--prob-treat", in->prob_treat,
                  "assignment probability used when the input lacks one");
  cmd->add_option("--alias", in->aliases,
                  "extra category spelling, token=e|hq|lq (repeatable)");
}

struct SliceOptions {
  std::string covariate;
  int slices = 4;
  std::string secondary_covariate;
  int secondary_slices = 3;
  std::string tie_breaker;
  bool unweighted_quantiles = false;
  bool unweighted_shares = false;
};

void add_slice_options(CLI::App* cmd, SliceOptions* s) {
  cmd->add_option("--covariate", s->covariate, "covariate to slice on");
  cmd->add_option("--slices", s->slices, "number of quantile slices")
      ->capture_default_str();
  cmd->add_option("--secondary-covariate", s->secondary_covariate,
                  "covariate sliced within each primary slice");
  cmd->add_option("--secondary-slices", s->secondary_slices,
                  "slices per primary slice")
      ->capture_default_str();
  cmd->add_option("--tie-breaker", s->tie_breaker,
                  "covariate that orders ties in the slicing sort");
  cmd->add_flag("--unweighted-quantiles", s->unweighted_quantiles,
                "cut slices on record counts instead of design weight");
  cmd->add_flag("--unweighted-shares", s->unweighted_shares,
                "aggregate slices by record counts instead of design weight");
}

Dataset load_input(const InputOptions& in) {
  IngestOptions opts;
  if (!std::isnan(in.prob_treat)) opts.default_prob_treat = in.prob_treat;
  for (const std::string& a : in.aliases) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("alias must look like token=e: " + a);
    const std::string token = a.substr(0, eq);
    const std::string cat = a.substr(eq + 1);
    School s;
    if (cat == "e") s = School::echs;
    else if (cat == "hq") s = School::hq;
    else if (cat == "lq") s = School::lq;
    else throw ConfigError("alias category must be e, hq, or lq: " + a);
    opts.category_aliases[token] = s;
  }
  return load_csv(in.input, opts);
}

AnalysisPlan make_plan(const SliceOptions& s) {
  AnalysisPlan plan;
  if (s.covariate.empty()) {
    if (!s.secondary_covariate.empty()) {
      throw ConfigError("--secondary-covariate needs --covariate");
    }
    return plan;
  }
  SlicePlan sp;
  sp.primary_covariate = s.covariate;
  sp.primary_bins = s.slices;
  if (!s.secondary_covariate.empty()) sp.secondary_covariate = s.secondary_covariate;
  sp.secondary_bins = s.secondary_slices;
  if (!s.tie_breaker.empty()) sp.tie_breaker = s.tie_breaker;
  sp.weighted_quantiles = !s.unweighted_quantiles;
  sp.weighted_shares = !s.unweighted_shares;
  plan.slice = sp;
  return plan;
}

class Emitter {
 public:
  explicit Emitter(const OutputOptions& out) : out_(out) {
    std::filesystem::create_directories(out_.out_dir);
  }

  void table(const std::string& stem, const Table& pretty, const Table& csv) {
    write_table_files(pretty, csv, out_.out_dir, stem);
    if (!first_) std::cout << "\n";
    first_ = false;
    std::cout << (out_.format == "csv" ? to_csv(csv) : to_pretty(pretty));
  }

  // Same table in both renderings (tidy data files).
  void table(const std::string& stem, const Table& t) { table(stem, t, t); }

  void file(const std::string& name, const std::string& content) {
    atomic_write((std::filesystem::path(out_.out_dir) / name).string(), content);
  }

 private:
  OutputOptions out_;
  bool first_ = true;
};

void mirror_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// --- subcommand bodies ------------------------------------------------------

struct EstimateArgs {
  InputOptions in;
  OutputOptions out;
};

void run_estimate(const EstimateArgs& a) {
  Dataset ds = load_input(a.in);
  GroupStats gs = estimate_group_stats(ds);
  StrataEstimates est = estimate_strata(ds);
  Emitter emit(a.out);
  emit.table("groups", group_table(gs, RenderMode::pretty),
             group_table(gs, RenderMode::csv));
  emit.table("strata", strata_table(est, RenderMode::pretty),
             strata_table(est, RenderMode::csv));
  emit.table("strata_summary", strata_summary_table(est, RenderMode::pretty),
             strata_summary_table(est, RenderMode::csv));
  mirror_warnings(est.warnings);
}

struct BoundsArgs {
  InputOptions in;
  SliceOptions slice;
  OutputOptions out;
};

void run_bounds(const BoundsArgs& a) {
  Dataset ds = load_input(a.in);
  AnalysisResult res = analyze(ds, make_plan(a.slice));
  Emitter emit(a.out);
  emit.table("strata", strata_table(res.strata, RenderMode::pretty),
             strata_table(res.strata, RenderMode::csv));
  emit.table("strata_summary", strata_summary_table(res.strata, RenderMode::pretty),
             strata_summary_table(res.strata, RenderMode::csv));
  emit.table("bounds", bounds_table(res.bounds, RenderMode::pretty),
             bounds_table(res.bounds, RenderMode::csv));
  if (res.sliced) {
    emit.table("slices", slice_table(*res.sliced, RenderMode::pretty),
               slice_table(*res.sliced, RenderMode::csv));
    const BoundReport& agg = res.sliced->aggregate.report;
    emit.table("bounds_sliced", bounds_table(agg, RenderMode::pretty),
               bounds_table(agg, RenderMode::csv));
  }
  mirror_warnings(res.warnings);
}

struct BootstrapArgs {
  InputOptions in;
  SliceOptions slice;
  OutputOptions out;
  std::size_t replicates = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 0;
  bool dump = false;
};

void run_bootstrap(const BootstrapArgs& a) {
  Dataset ds = load_input(a.in);
  BootstrapConfig cfg;
  cfg.replicates = a.replicates;
  cfg.alpha = a.alpha;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  std::vector<ReplicateRecord> dump;
  AdjustedBounds adj =
      bootstrap_bounds(ds, make_plan(a.slice), cfg, a.dump ? &dump : nullptr);
  Emitter emit(a.out);
  emit.table("adjusted", adjusted_table(adj, RenderMode::pretty),
             adjusted_table(adj, RenderMode::csv));
  if (a.dump) emit.file("replicates.csv", to_csv(replicate_table(dump)));
  mirror_warnings(adj.warnings);
}

struct DiagnoseArgs {
  InputOptions in;
  OutputOptions out;
  std::vector<std::string> covariates;
  std::vector<std::string> kinds;
};

void run_diagnose(const DiagnoseArgs& a) {
  if (a.kinds.size() != a.covariates.size() && a.kinds.size() != 1) {
    throw ConfigError("--kind must be given once or once per covariate");
  }
  Dataset ds = load_input(a.in);
  std::vector<DiagnosticResult> results;
  for (std::size_t i = 0; i < a.covariates.size(); ++i) {
    const std::string& kind_name = a.kinds.size() == 1 ? a.kinds[0] : a.kinds[i];
    CovariateKind kind;
    if (kind_name == "principal") kind = CovariateKind::principal;
    else if (kind_name == "compliance") kind = CovariateKind::compliance;
    else if (kind_name == "prognostic") kind = CovariateKind::prognostic;
    else throw ConfigError("unknown diagnostic kind: " + kind_name);
    results.push_back(covariate_r2(ds, a.covariates[i], kind));
  }
  Emitter emit(a.out);
  emit.table("diagnostics", diagnostics_table(results, RenderMode::pretty),
             diagnostics_table(results, RenderMode::csv));
  for (const auto& r : results) mirror_warnings(r.warnings);
}

struct SimulateArgs {
  OutputOptions out;
  std::string scenario = "echs";
  std::string sweep = "dataset";
  std::uint64_t seed = 0;
  std::size_t trials = 0;  // 0 = sweep default
  int slices = 0;          // 0 = sweep default
  int secondary_slices = 3;
  std::vector<double> sigma2;
  std::vector<std::size_t> n_list;
  std::vector<int> k_list;
  std::size_t replicates = 0;
  double alpha = 0.05;
  double noise_var = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_override = 0;
  std::string covariate = "x1";
  int workers = 0;
};

void run_simulate(const SimulateArgs& a) {
  SimScenario sc = load_scenario(a.scenario);
  if (a.n_override > 0) sc.n = a.n_override;
  if (!std::isnan(a.noise_var)) {
    if (a.noise_var < 0) throw ConfigError("--noise-var must be nonnegative");
    const double sd = std::sqrt(a.noise_var);
    sc.noise_sd = {sd, sd, sd};
  }
  Emitter emit(a.out);

  if (a.sweep == "dataset") {
    LatentPopulation pop = simulate_population(sc, a.seed);
    Dataset ds = observe(pop, sc, a.seed);
    std::ostringstream csv;
    write_csv(ds, csv);
    emit.file("dataset.csv", csv.str());
    ScenarioTruth truth = scenario_truth(sc);
    Table t;
    t.title = "Scenario truth";
    t.columns = {"stratum", "mean_control", "mean_treated", "effect"};
    for (int r = 0; r < kNumStrata; ++r) {
      t.rows.push_back({std::string(stratum_label(static_cast<Stratum>(r))),
                        format_number(truth.mean0[r]), format_number(truth.mean1[r]),
                        format_number(truth.itt[r])});
    }
    t.notes.push_back("pooled complier means: m1 = " + format_number(truth.m1) +
                      ", m0 = " + format_number(truth.m0) +
                      ", effect = " + format_number(truth.cace));
    emit.table("truth", t);
    return;
  }
  if (a.sweep == "noise") {
    NoiseGridConfig cfg;
    cfg.sigma2 = a.sigma2.empty() ? std::vector<double>{0.0, 0.5, 1.0, 2.0} : a.sigma2;
    cfg.trials = a.trials ? a.trials : 30;
    cfg.slices = a.slices ? a.slices : 4;
    cfg.secondary_slices = a.secondary_slices;
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    emit.table("noise_grid", noise_grid_table(run_noise_grid(sc, cfg)));
    return;
  }
  if (a.sweep == "size") {
    SampleSizeConfig cfg;
    cfg.n_list = a.n_list.empty() ? std::vector<std::size_t>{100, 400, 1600, 3600}
                                  : a.n_list;
    cfg.trials = a.trials ? a.trials : 100;
    cfg.slices = a.slices ? a.slices : 6;
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    emit.table("sample_size", sample_size_table(run_sample_size_sweep(sc, cfg)));
    return;
  }
  if (a.sweep == "slices") {
    SliceCountConfig cfg;
    cfg.k_list = a.k_list.empty() ? std::vector<int>{1, 6, 12, 30} : a.k_list;
    cfg.trials = a.trials ? a.trials : 100;
    cfg.bootstrap_replicates = a.replicates ? a.replicates : 200;
    cfg.alpha = a.alpha;
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    SliceCountResult res = run_slice_count_sweep(sc, cfg);
    emit.table("slice_count", slice_count_table(res));
    emit.table("slice_count_reference", slice_count_reference_table(res, cfg.k_list));
    return;
  }
  if (a.sweep == "coverage") {
    AnalysisPlan plan;
    if (!a.covariate.empty() && a.covariate != "none") {
      SlicePlan sp;
      sp.primary_covariate = a.covariate;
      sp.primary_bins = a.slices ? a.slices : 4;
      plan.slice = sp;
    }
    BootstrapConfig cfg;
    cfg.replicates = a.replicates ? a.replicates : 500;
    cfg.alpha = a.alpha;
    cfg.workers = a.workers;
    CoverageSummary cov =
        coverage_experiment(sc, plan, cfg, a.trials ? a.trials : 100, a.seed);
    emit.table("coverage", coverage_table(cov, RenderMode::pretty),
               coverage_table(cov, RenderMode::csv));
    return;
  }
  throw ConfigError("unknown sweep: " + a.sweep);
}

struct ReplicateArgs {
  OutputOptions out;
  std::uint64_t seed = 0;
  std::size_t trials = 30;
  std::vector<double> sigma2;
  int workers = 0;
};

// Regenerates the published study's summary tables from the reconstructed
// margins, plus the simulation width grid behind the covariate-choice figure.
void run_replicate(const ReplicateArgs& a) {
  Emitter emit(a.out);

  Dataset ds = demo_dataset();
  std::ostringstream csv;
  write_csv(ds, csv);
  emit.file("dataset.csv", csv.str());

  GroupStats gs = estimate_group_stats(ds);
  AnalysisResult res = analyze(ds, {});
  emit.table("groups", group_table(gs, RenderMode::pretty),
             group_table(gs, RenderMode::csv));
  emit.table("strata", strata_table(res.strata, RenderMode::pretty),
             strata_table(res.strata, RenderMode::csv));
  emit.table("strata_summary", strata_summary_table(res.strata, RenderMode::pretty),
             strata_summary_table(res.strata, RenderMode::csv));
  emit.table("bounds", bounds_table(res.bounds, RenderMode::pretty),
             bounds_table(res.bounds, RenderMode::csv));

  NoiseGridConfig cfg;
  cfg.sigma2 = a.sigma2.empty() ? std::vector<double>{0.0, 0.5, 1.0, 2.0} : a.sigma2;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.workers = a.workers;
  emit.table("noise_grid", noise_grid_table(run_noise_grid(echs_scenario(), cfg)));
  mirror_warnings(res.warnings);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal-stratification estimates and sharp complier bounds"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "settings file; keys are long option names, # comments allowed");

  EstimateArgs est_args;
  CLI::App* est = app.add_subcommand(
      "estimate", "identify stratum shares and control-side means");
  add_input_options(est, &est_args.in);
  add_output_options(est, &est_args.out);

  BoundsArgs bounds_args;
  CLI::App* bounds = app.add_subcommand(
      "bounds", "sharp complier bounds, optionally tightened by slicing");
  add_input_options(bounds, &bounds_args.in);
  add_slice_options(bounds, &bounds_args.slice);
  add_output_options(bounds, &bounds_args.out);

  BootstrapArgs boot_args;
  CLI::App* boot = app.add_subcommand(
      "bootstrap", "resampling-adjusted uncertainty envelopes for the bounds");
  add_input_options(boot, &boot_args.in);
  add_slice_options(boot, &boot_args.slice);
  add_output_options(boot, &boot_args.out);
  boot->add_option("--replicates", boot_args.replicates, "bootstrap replicates")
      ->capture_default_str();
  boot->add_option("--alpha", boot_args.alpha, "per-endpoint quantile level")
      ->capture_default_str();
  boot->add_option("--seed", boot_args.seed, "resampling seed")->required();
  boot->add_option("--workers", boot_args.workers, "thread count, 0 = all cores")
      ->capture_default_str();
  boot->add_flag("--dump-replicates", boot_args.dump,
                 "also write per-replicate endpoints (replicates.csv)");

  DiagnoseArgs diag_args;
  CLI::App* diag = app.add_subcommand(
      "diagnose", "covariate usefulness screens (McFadden R2)");
  add_input_options(diag, &diag_args.in);
  add_output_options(diag, &diag_args.out);
  diag->add_option("--covariate", diag_args.covariates, "covariate(s) to screen")
      ->required();
  diag->add_option("--kind", diag_args.kinds,
                   "principal|compliance|prognostic, once or once per covariate")
      ->required();

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "generate calibrated synthetic studies and run sweeps");
  add_output_options(sim, &sim_args.out);
  sim->add_option("--scenario", sim_args.scenario,
                  "echs, auxiliary, or a scenario JSON file")
      ->capture_default_str();
  sim->add_option("--sweep", sim_args.sweep, "what to run")
      ->check(CLI::IsMember({"dataset", "noise", "size", "slices", "coverage"}))
      ->capture_default_str();
  sim->add_option("--seed", sim_args.seed, "master seed")->required();
  sim->add_option("--trials", sim_args.trials, "trials per configuration");
  sim->add_option("--slices", sim_args.slices, "primary slice count");
  sim->add_option("--secondary-slices", sim_args.secondary_slices,
                  "nested slice count")
      ->capture_default_str();
  sim->add_option("--sigma2", sim_args.sigma2, "noise-grid covariate variances");
  sim->add_option("--n-list", sim_args.n_list, "sample sizes for the size sweep");
  sim->add_option("--k-list", sim_args.k_list, "slice counts for the slices sweep");
  sim->add_option("--replicates", sim_args.replicates,
                  "bootstrap replicates (slices/coverage sweeps)");
  sim->add_option("--alpha", sim_args.alpha, "bootstrap quantile level")
      ->capture_default_str();
  sim->add_option("--noise-var", sim_args.noise_var,
                  "override all three covariate noise variances");
  sim->add_option("--n", sim_args.n_override, "override the scenario sample size");
  sim->add_option("--covariate", sim_args.covariate,
                  "slicing covariate for the coverage sweep (none to disable)")
      ->capture_default_str();
  sim->add_option("--workers", sim_args.workers, "thread count, 0 = all cores")
      ->capture_default_str();

  ReplicateArgs rep_args;
  CLI::App* rep = app.add_subcommand(
      "replicate", "rebuild the published study's tables and width grid");
  add_output_options(rep, &rep_args.out);
  rep->add_option("--seed", rep_args.seed, "master seed for the width grid")
      ->required();
  rep->add_option("--trials", rep_args.trials, "trials per noise level")
      ->capture_default_str();
  rep->add_option("--sigma2", rep_args.sigma2, "noise-grid covariate variances");
  rep->add_option("--workers", rep_args.workers, "thread count, 0 = all cores")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (est->parsed()) run_estimate(est_args);
    else if (bounds->parsed()) run_bounds(bounds_args);
    else if (boot->parsed()) run_bootstrap(boot_args);
    else if (diag->parsed()) run_diagnose(diag_args);
    else if (sim->parsed()) run_simulate(sim_args);
    else if (rep->parsed()) run_replicate(rep_args);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
