#include "stratbound/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "stratbound/analysis.hpp"
#include "stratbound/bootstrap.hpp"
#include "stratbound/diagnostics.hpp"
#include "stratbound/rng.hpp"

namespace stratbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr int iEat = static_cast<int>(Stratum::eat);
constexpr int iHqat = static_cast<int>(Stratum::hqat);
constexpr int iHqc = static_cast<int>(Stratum::hqc);
constexpr int iLqat = static_cast<int>(Stratum::lqat);
constexpr int iLqc = static_cast<int>(Stratum::lqc);

// Threshold t with P(U > t) = p for U ~ N(0,1).
double upper_threshold(double p) {
  if (p <= 0) return std::numeric_limits<double>::infinity();
  if (p >= 1) return -std::numeric_limits<double>::infinity();
  return normal_quantile(1.0 - p);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

int thread_count(int workers) {
#ifdef _OPENMP
  return workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
  return 1;
#endif
}

}  // namespace

void SimScenario::validate() const {
  double sum = 0;
  for (double p : pi) {
    if (!(p >= 0) || !std::isfinite(p)) {
      throw ConfigError("stratum shares must be nonnegative");
    }
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("stratum shares must sum to 1");
  if (!std::isfinite(beta)) throw ConfigError("outcome slope must be finite");
  for (double o : omega0) {
    if (!std::isfinite(o)) throw ConfigError("location shifts must be finite");
  }
  if (!std::isfinite(omega1_lqc) || !std::isfinite(omega1_hqc)) {
    throw ConfigError("location shifts must be finite");
  }
  for (double sd : noise_sd) {
    if (!(sd >= 0) || !std::isfinite(sd)) {
      throw ConfigError("covariate noise sd must be nonnegative");
    }
  }
  if (n < 1) throw ConfigError("population size must be at least 1");
  if (!(treat_frac > 0) || !(treat_frac < 1)) {
    throw ConfigError("offer fraction must lie strictly between 0 and 1");
  }
}

SimScenario echs_scenario() {
  SimScenario s;
  s.name = "echs";
  s.pi = {0.03, 0.03, 0.11, 0.11, 0.72};
  s.beta = 5.65;
  s.omega0 = {17.0, 8.0, 13.0, 6.0, 6.5};
  s.omega1_lqc = 9.6;
  s.omega1_hqc = 11.0;
  s.noise_sd = {0.0, 0.0, 0.0};
  s.n = 3820;
  s.treat_frac = 0.58;
  return s;
}

SimScenario auxiliary_scenario() {
  SimScenario s;
  s.name = "auxiliary";
  s.pi = {0.05, 0.10, 0.25, 0.15, 0.45};
  s.beta = 4.0;
  s.omega0 = {0.549791, 1.686106, 0.660523, -1.686106, -0.883346};
  s.omega1_lqc = 1.568527;
  s.omega1_hqc = 0.0;
  s.noise_sd = {0.0, 0.0, 0.0};
  s.n = 3600;
  s.treat_frac = 0.5;
  return s;
}

namespace {

using nlohmann::json;

double need_number(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("scenario is missing key: " + key);
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError("scenario key must be a number: " + key);
  return v.get<double>();
}

std::array<double, kNumStrata> read_stratum_map(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_object()) {
    throw ConfigError("scenario needs an object for key: " + key);
  }
  const json& m = j.at(key);
  static const char* names[kNumStrata] = {"eat", "hqat", "hqc", "lqat", "lqc"};
  for (const auto& item : m.items()) {
    if (std::find(std::begin(names), std::end(names), item.key()) == std::end(names)) {
      throw ConfigError("unknown stratum in " + key + ": " + item.key());
    }
  }
  std::array<double, kNumStrata> out{};
  for (int r = 0; r < kNumStrata; ++r) out[r] = need_number(m, names[r]);
  return out;
}

}  // namespace

SimScenario load_scenario(const std::string& name_or_path) {
  if (name_or_path == "echs") return echs_scenario();
  if (name_or_path == "auxiliary") return auxiliary_scenario();

  std::ifstream in(name_or_path);
  if (!in) throw Error("cannot open scenario file: " + name_or_path);
  json j;
  try {
    j = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("scenario file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("scenario file must hold a JSON object");

  static const std::set<std::string> known = {
      "name",     "pi", "beta",       "omega_control",      "omega_treated",
      "noise_sd", "n",  "treat_frac", "complete_assignment"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError("unknown scenario key: " + item.key());
    }
  }

  SimScenario s;
  s.name = j.value("name", name_or_path);
  s.pi = read_stratum_map(j, "pi");
  s.beta = need_number(j, "beta");
  s.omega0 = read_stratum_map(j, "omega_control");
  if (!j.contains("omega_treated") || !j.at("omega_treated").is_object()) {
    throw ConfigError("scenario needs an object for key: omega_treated");
  }
  const json& ot = j.at("omega_treated");
  for (const auto& item : ot.items()) {
    if (item.key() != "lqc" && item.key() != "hqc") {
      throw ConfigError("omega_treated only takes lqc and hqc, got: " + item.key());
    }
  }
  s.omega1_lqc = need_number(ot, "lqc");
  s.omega1_hqc = need_number(ot, "hqc");
  if (j.contains("noise_sd")) {
    const json& ns = j.at("noise_sd");
    if (!ns.is_array() || ns.size() != 3) {
      throw ConfigError("noise_sd must be an array of three values");
    }
    for (int t = 0; t < 3; ++t) {
      if (!ns[t].is_number()) throw ConfigError("noise_sd entries must be numbers");
      s.noise_sd[t] = ns[t].get<double>();
    }
  }
  if (!j.contains("n") || !j.at("n").is_number_unsigned()) {
    throw ConfigError("scenario needs a positive integer key: n");
  }
  s.n = j.at("n").get<std::size_t>();
  s.treat_frac = j.contains("treat_frac") ? need_number(j, "treat_frac") : 0.5;
  if (j.contains("complete_assignment")) {
    if (!j.at("complete_assignment").is_boolean()) {
      throw ConfigError("complete_assignment must be a boolean");
    }
    s.complete_assignment = j.at("complete_assignment").get<bool>();
  }
  s.validate();
  return s;
}

Thresholds derive_thresholds(const std::array<double, kNumStrata>& pi) {
  const double eat = pi[iEat];
  if (eat >= 1.0) throw ConfigError("program always-taker share must be below 1");
  const double hq_side = pi[iHqc] + pi[iHqat];
  const double lq_side = pi[iLqc] + pi[iLqat];
  if (hq_side <= 0 || lq_side <= 0) {
    throw ConfigError("each fallback category needs positive total share");
  }
  Thresholds th;
  th.gamma0 = 1.0 - hq_side / (1.0 - eat);
  th.gamma1_hq = (pi[iHqc] / hq_side) * (1.0 - eat) + eat;
  th.gamma1_lq = (pi[iLqc] / lq_side) * (1.0 - eat) + eat;
  return th;
}

LatentPopulation simulate_population(const SimScenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const Thresholds th = derive_thresholds(scenario.pi);
  // u1 above this → hq fallback; P(hq fallback) = 1 - gamma0.
  const double t_fallback = upper_threshold(1.0 - th.gamma0);
  const double t_s0 = upper_threshold(scenario.pi[iEat]);
  const double t_s1_hq = upper_threshold(th.gamma1_hq);
  const double t_s1_lq = upper_threshold(th.gamma1_lq);

  const std::size_t n = scenario.n;
  LatentPopulation pop;
  pop.n = n;
  pop.u1.resize(n);
  pop.u2.resize(n);
  pop.u3.resize(n);
  pop.fallback.resize(n);
  pop.s0.resize(n);
  pop.s1.resize(n);
  pop.stratum.resize(n);
  pop.y0.resize(n);
  pop.y1.resize(n);
  pop.x1.resize(n);
  pop.x2.resize(n);
  pop.x3.resize(n);

  SplitRng traits(derive_key(seed, Stream::population));
  SplitRng noise(derive_key(seed, Stream::noise));
  SplitRng outcome(derive_key(seed, Stream::outcome));

  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = traits.next_normal();
    const double u2 = traits.next_normal();
    const double u3 = traits.next_normal();
    // Noise draws are consumed even at sd 0 so populations with different
    // noise levels share the same traits and outcomes.
    const double e1 = noise.next_normal();
    const double e2 = noise.next_normal();
    const double e3 = noise.next_normal();
    const double v = outcome.next_unit();

    const School fb = u1 > t_fallback ? School::hq : School::lq;
    const bool s0e = u2 > t_s0;
    const bool s1e = u2 > (fb == School::hq ? t_s1_hq : t_s1_lq);
    const School s0 = s0e ? School::echs : fb;
    const School s1 = s1e ? School::echs : fb;
    Stratum r;
    if (s0e) {
      r = Stratum::eat;
    } else if (fb == School::hq) {
      r = s1e ? Stratum::hqc : Stratum::hqat;
    } else {
      r = s1e ? Stratum::lqc : Stratum::lqat;
    }

    // One shared uniform against both arms' probabilities keeps potential
    // outcomes identical whenever the location shift is shared (exclusion).
    const double p0 = logistic(scenario.beta * u3 + scenario.omega(r, 0));
    const double p1 = logistic(scenario.beta * u3 + scenario.omega(r, 1));

    pop.u1[i] = u1;
    pop.u2[i] = u2;
    pop.u3[i] = u3;
    pop.fallback[i] = fb;
    pop.s0[i] = s0;
    pop.s1[i] = s1;
    pop.stratum[i] = r;
    pop.y0[i] = v < p0 ? 1 : 0;
    pop.y1[i] = v < p1 ? 1 : 0;
    pop.x1[i] = u1 + scenario.noise_sd[0] * e1;
    pop.x2[i] = u2 + scenario.noise_sd[1] * e2;
    pop.x3[i] = u3 + scenario.noise_sd[2] * e3;
  }
  return pop;
}

Dataset observe(const LatentPopulation& pop, const SimScenario& scenario,
                std::uint64_t seed) {
  if (pop.n == 0) throw PreconditionError("cannot observe an empty population");
  SplitRng rng(derive_key(seed, Stream::assignment));

  std::vector<std::uint8_t> z(pop.n, 0);
  double prob = scenario.treat_frac;
  if (scenario.complete_assignment) {
    const auto m = static_cast<std::size_t>(
        std::llround(scenario.treat_frac * static_cast<double>(pop.n)));
    if (m == 0 || m >= pop.n) {
      throw ConfigError("complete assignment would leave an arm empty");
    }
    std::vector<std::uint32_t> idx(pop.n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t j = k + rng.next_below(static_cast<std::uint32_t>(pop.n - k));
      std::swap(idx[k], idx[j]);
      z[idx[k]] = 1;
    }
    prob = static_cast<double>(m) / static_cast<double>(pop.n);
  } else {
    for (std::size_t i = 0; i < pop.n; ++i) {
      z[i] = rng.next_unit() < scenario.treat_frac ? 1 : 0;
    }
  }

  DatasetBuilder builder({"x1", "x2", "x3"});
  for (std::size_t i = 0; i < pop.n; ++i) {
    const bool offered = z[i] != 0;
    builder.add_row(offered ? 1 : 0, offered ? pop.s1[i] : pop.s0[i],
                    offered ? pop.y1[i] : pop.y0[i], prob,
                    {pop.x1[i], pop.x2[i], pop.x3[i]});
  }
  return builder.build();
}

std::array<std::optional<double>, kNumStrata> true_itt(const LatentPopulation& pop) {
  std::array<double, kNumStrata> sum{};
  std::array<std::size_t, kNumStrata> count{};
  for (std::size_t i = 0; i < pop.n; ++i) {
    const int r = static_cast<int>(pop.stratum[i]);
    sum[r] += static_cast<double>(pop.y1[i]) - static_cast<double>(pop.y0[i]);
    ++count[r];
  }
  std::array<std::optional<double>, kNumStrata> out;
  for (int r = 0; r < kNumStrata; ++r) {
    if (count[r] > 0) out[r] = sum[r] / static_cast<double>(count[r]);
  }
  return out;
}

double logistic_normal_mean(double beta, double omega) {
  // Composite Simpson over ±12 standard deviations; the integrand is smooth
  // and the tails are below 1e-32, so this is exact to double precision.
  constexpr int kIntervals = 4800;  // even
  constexpr double kLo = -12.0, kHi = 12.0;
  const double h = (kHi - kLo) / kIntervals;
  const double inv_sqrt_2pi = 0.3989422804014327;
  auto f = [&](double u) {
    return inv_sqrt_2pi * std::exp(-0.5 * u * u) * logistic(beta * u + omega);
  };
  double acc = f(kLo) + f(kHi);
  for (int k = 1; k < kIntervals; ++k) {
    acc += f(kLo + k * h) * (k % 2 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

ScenarioTruth scenario_truth(const SimScenario& scenario) {
  scenario.validate();
  ScenarioTruth t;
  for (int r = 0; r < kNumStrata; ++r) {
    const auto stratum = static_cast<Stratum>(r);
    t.mean0[r] = logistic_normal_mean(scenario.beta, scenario.omega(stratum, 0));
    t.mean1[r] = logistic_normal_mean(scenario.beta, scenario.omega(stratum, 1));
    t.itt[r] = t.mean1[r] - t.mean0[r];
  }
  const double total = scenario.pi[iLqc] + scenario.pi[iHqc];
  if (total > 0) {
    t.m1 = (scenario.pi[iLqc] * t.mean1[iLqc] + scenario.pi[iHqc] * t.mean1[iHqc]) / total;
    t.m0 = (scenario.pi[iLqc] * t.mean0[iLqc] + scenario.pi[iHqc] * t.mean0[iHqc]) / total;
    t.cace = t.m1 - t.m0;
  }
  return t;
}

namespace {

struct PlanWidths {
  bool failed = false;
  double width_lqc = kNaN;
  double width_hqc = kNaN;
};

PlanWidths plan_widths(const Dataset& ds, const AnalysisPlan& plan) {
  PlanWidths out;
  try {
    AnalysisResult res = analyze(ds, plan);
    const BoundReport& rep =
        plan.slice ? res.sliced->aggregate.report : res.bounds;
    if (!rep.itt_lqc || !rep.itt_hqc) throw PreconditionError("effect interval undefined");
    out.width_lqc = rep.itt_lqc->width();
    out.width_hqc = rep.itt_hqc->width();
  } catch (const Error&) {
    out.failed = true;
  }
  return out;
}

AnalysisPlan single_plan(const std::string& covariate, int bins) {
  AnalysisPlan plan;
  plan.slice = SlicePlan{};
  plan.slice->primary_covariate = covariate;
  plan.slice->primary_bins = bins;
  return plan;
}

double diagnostic_r2(const Dataset& ds, const std::string& covariate,
                     CovariateKind kind) {
  try {
    DiagnosticResult d = covariate_r2(ds, covariate, kind);
    return d.r2 ? *d.r2 : kNaN;
  } catch (const Error&) {
    return kNaN;
  }
}

}  // namespace

std::vector<NoiseGridRow> run_noise_grid(const SimScenario& scenario,
                                         const NoiseGridConfig& cfg) {
  scenario.validate();
  if (cfg.sigma2.empty()) throw ConfigError("noise grid needs at least one variance");
  for (double s2 : cfg.sigma2) {
    if (!(s2 >= 0) || !std::isfinite(s2)) {
      throw ConfigError("covariate noise variance must be nonnegative");
    }
  }
  if (cfg.trials < 1) throw ConfigError("noise grid needs at least one trial");
  if (cfg.slices < 1 || cfg.secondary_slices < 1) {
    throw ConfigError("slice counts must be at least 1");
  }

  static const char* kPlans[5] = {"none", "x1", "x2", "x3", "x1x3"};
  const std::size_t cells = cfg.sigma2.size() * cfg.trials;
  std::vector<NoiseGridRow> rows(cells * 5);

  [[maybe_unused]] const int threads = thread_count(cfg.workers);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t cell = 0; cell < static_cast<std::ptrdiff_t>(cells); ++cell) {
    const std::size_t gi = static_cast<std::size_t>(cell) / cfg.trials;
    const std::size_t t = static_cast<std::size_t>(cell) % cfg.trials;

    SimScenario sc = scenario;
    const double sd = std::sqrt(cfg.sigma2[gi]);
    sc.noise_sd = {sd, sd, sd};
    // Same trial index → same trait/outcome draws at every noise level.
    const std::uint64_t seed = derive_key(cfg.seed, Stream::scenario, t);
    const LatentPopulation pop = simulate_population(sc, seed);
    const Dataset ds = observe(pop, sc, seed);

    const double r2_x1 = diagnostic_r2(ds, "x1", CovariateKind::principal);
    const double r2_x2 = diagnostic_r2(ds, "x2", CovariateKind::compliance);
    const double r2_x3 = diagnostic_r2(ds, "x3", CovariateKind::prognostic);

    std::array<AnalysisPlan, 5> plans;
    plans[0] = AnalysisPlan{};
    plans[1] = single_plan("x1", cfg.slices);
    plans[2] = single_plan("x2", cfg.slices);
    plans[3] = single_plan("x3", cfg.slices);
    plans[4] = single_plan("x1", cfg.slices);
    plans[4].slice->secondary_covariate = "x3";
    plans[4].slice->secondary_bins = cfg.secondary_slices;

    PlanWidths base;
    for (int p = 0; p < 5; ++p) {
      const PlanWidths w = p == 0 ? (base = plan_widths(ds, plans[p]))
                                  : plan_widths(ds, plans[p]);
      NoiseGridRow& row = rows[static_cast<std::size_t>(cell) * 5 + p];
      row.sigma2 = cfg.sigma2[gi];
      row.plan = kPlans[p];
      row.trial = t;
      row.failed = w.failed;
      row.width_lqc = w.width_lqc;
      row.width_hqc = w.width_hqc;
      if (!w.failed && !base.failed && base.width_lqc > 0) {
        row.pct_lqc = 100.0 * w.width_lqc / base.width_lqc;
      } else {
        row.pct_lqc = kNaN;
      }
      if (!w.failed && !base.failed && base.width_hqc > 0) {
        row.pct_hqc = 100.0 * w.width_hqc / base.width_hqc;
      } else {
        row.pct_hqc = kNaN;
      }
      switch (p) {
        case 1: row.r2 = r2_x1; break;
        case 2: row.r2 = r2_x2; break;
        case 3: row.r2 = r2_x3; break;
        case 4: row.r2 = r2_x1; break;
        default: row.r2 = kNaN; break;
      }
    }
  }
  return rows;
}

std::vector<SampleSizeRow> run_sample_size_sweep(const SimScenario& scenario,
                                                 const SampleSizeConfig& cfg) {
  scenario.validate();
  if (cfg.n_list.empty()) throw ConfigError("sample-size sweep needs sizes");
  for (std::size_t n : cfg.n_list) {
    if (n < 1) throw ConfigError("sample sizes must be positive");
  }
  if (cfg.trials < 1) throw ConfigError("sample-size sweep needs at least one trial");
  if (cfg.slices < 1) throw ConfigError("slice count must be at least 1");

  const std::size_t cells = cfg.n_list.size() * cfg.trials;
  std::vector<SampleSizeRow> rows(cells * 2);

  [[maybe_unused]] const int threads = thread_count(cfg.workers);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t cell = 0; cell < static_cast<std::ptrdiff_t>(cells); ++cell) {
    const std::size_t ni = static_cast<std::size_t>(cell) / cfg.trials;
    const std::size_t t = static_cast<std::size_t>(cell) % cfg.trials;

    SimScenario sc = scenario;
    sc.n = cfg.n_list[ni];
    const std::uint64_t seed = derive_key(cfg.seed, Stream::scenario, cell);
    const LatentPopulation pop = simulate_population(sc, seed);
    const Dataset ds = observe(pop, sc, seed);

    const AnalysisPlan plans[2] = {AnalysisPlan{}, single_plan("x1", cfg.slices)};
    static const char* kPlans[2] = {"none", "x1"};
    for (int p = 0; p < 2; ++p) {
      const PlanWidths w = plan_widths(ds, plans[p]);
      SampleSizeRow& row = rows[static_cast<std::size_t>(cell) * 2 + p];
      row.n = sc.n;
      row.plan = kPlans[p];
      row.trial = t;
      row.failed = w.failed;
      row.width_lqc = w.width_lqc;
      row.width_hqc = w.width_hqc;
    }
  }
  return rows;
}

SliceCountResult run_slice_count_sweep(const SimScenario& scenario,
                                       const SliceCountConfig& cfg) {
  scenario.validate();
  if (cfg.k_list.empty()) throw ConfigError("slice-count sweep needs cell counts");
  for (int k : cfg.k_list) {
    if (k < 1) throw ConfigError("cell counts must be at least 1");
  }
  if (cfg.trials < 1) throw ConfigError("slice-count sweep needs at least one trial");
  if (cfg.bootstrap_replicates < 1) {
    throw ConfigError("slice-count sweep needs at least one bootstrap replicate");
  }
  if (cfg.oracle_n < 2) throw ConfigError("reference population is too small");

  SliceCountResult out;
  const ScenarioTruth truth = scenario_truth(scenario);
  out.true_itt_lqc = truth.itt[iLqc];
  out.true_itt_hqc = truth.itt[iHqc];

  // Reference widths from one large balanced population.
  {
    SimScenario big = scenario;
    big.n = cfg.oracle_n;
    big.complete_assignment = true;
    const std::uint64_t seed = derive_key(cfg.seed, Stream::population, 0);
    const LatentPopulation pop = simulate_population(big, seed);
    const Dataset ds = observe(pop, big, seed);
    for (int k : cfg.k_list) {
      const PlanWidths w = plan_widths(ds, single_plan("x1", k));
      out.oracle_width_lqc.push_back(w.width_lqc);
      out.oracle_width_hqc.push_back(w.width_hqc);
    }
  }

  const std::size_t cells = cfg.k_list.size() * cfg.trials;
  out.rows.resize(cells);

  [[maybe_unused]] const int threads = thread_count(cfg.workers);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t cell = 0; cell < static_cast<std::ptrdiff_t>(cells); ++cell) {
    const std::size_t ki = static_cast<std::size_t>(cell) / cfg.trials;
    const std::size_t t = static_cast<std::size_t>(cell) % cfg.trials;

    SliceCountRow& row = out.rows[cell];
    row.k = cfg.k_list[ki];
    row.trial = t;

    const std::uint64_t seed = derive_key(cfg.seed, Stream::scenario, cell);
    const LatentPopulation pop = simulate_population(scenario, seed);
    const Dataset ds = observe(pop, scenario, seed);

    const AnalysisPlan plan = single_plan("x1", row.k);
    BootstrapConfig bc;
    bc.replicates = cfg.bootstrap_replicates;
    bc.alpha = cfg.alpha;
    bc.seed = derive_key(cfg.seed, Stream::resample, cell);
    bc.workers = 1;  // the sweep already parallelizes across trials
    try {
      const AdjustedBounds adj = bootstrap_bounds(ds, plan, bc);
      row.width_lqc = adj.raw.itt_lqc_hi - adj.raw.itt_lqc_lo;
      row.width_hqc = adj.raw.itt_hqc_hi - adj.raw.itt_hqc_lo;
      row.adj_width_lqc = adj.itt_lqc.hi - adj.itt_lqc.lo;
      row.adj_width_hqc = adj.itt_hqc.hi - adj.itt_hqc.lo;
      row.covered_lqc =
          adj.itt_lqc.lo <= out.true_itt_lqc && out.true_itt_lqc <= adj.itt_lqc.hi;
      row.covered_hqc =
          adj.itt_hqc.lo <= out.true_itt_hqc && out.true_itt_hqc <= adj.itt_hqc.hi;
    } catch (const Error&) {
      row.failed = true;
      row.width_lqc = row.width_hqc = kNaN;
      row.adj_width_lqc = row.adj_width_hqc = kNaN;
    }
  }
  return out;
}

}  // namespace stratbound
