#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratbound/dataset.hpp"
#include "stratbound/types.hpp"

namespace stratbound {

// Generative model: latent traits U1,U2,U3 ~ N(0,1) i.i.d. U1 sets the
// fallback category (hq vs lq), U2 sets program entry under each assignment
// via stratum-share-matching thresholds, U3 drives outcomes through a
// logistic model with stratum/assignment location shifts, and covariates are
// noisy copies of the traits.
struct SimScenario {
  std::string name;
  std::array<double, kNumStrata> pi{};      // target stratum shares
  double beta = 0;                          // outcome slope on U3
  std::array<double, kNumStrata> omega0{};  // location shift, control side
  double omega1_lqc = 0;                    // treated-side shifts (always-takers
  double omega1_hqc = 0;                    //   reuse their control value)
  std::array<double, 3> noise_sd{};         // covariate noise sd (x1,x2,x3)
  std::size_t n = 0;
  double treat_frac = 0.5;
  // false: independent Bernoulli(treat_frac) offers; true: exactly
  // round(n*treat_frac) offers at random.
  bool complete_assignment = false;

  double omega(Stratum r, int z) const {
    if (z == 1 && r == Stratum::lqc) return omega1_lqc;
    if (z == 1 && r == Stratum::hqc) return omega1_hqc;
    return omega0[static_cast<int>(r)];
  }

  void validate() const;  // throws ConfigError
};

// Calibrated presets. The first mirrors the published study's generative
// parameters; the second hits the auxiliary study's published summary
// targets (its exact inputs are not published, so these values are derived).
SimScenario echs_scenario();
SimScenario auxiliary_scenario();

// "echs", "auxiliary", or a path to a scenario file (JSON, comments allowed).
SimScenario load_scenario(const std::string& name_or_path);

struct Thresholds {
  double gamma0 = 0;     // P(fallback category is lq)
  double gamma1_hq = 0;  // P(program under offer | fallback hq)
  double gamma1_lq = 0;
};

// Shares → thresholds: gamma0 = 1 - (pi_hqc+pi_hqat)/(1-pi_eat);
// gamma1(h) = (pi_hc/(pi_hc+pi_hat))*(1-pi_eat) + pi_eat for each fallback h.
Thresholds derive_thresholds(const std::array<double, kNumStrata>& pi);

struct LatentPopulation {
  std::size_t n = 0;
  std::vector<double> u1, u2, u3;
  std::vector<School> fallback;  // category attended when not in the program
  std::vector<School> s0, s1;    // category under each assignment
  std::vector<Stratum> stratum;
  std::vector<std::uint8_t> y0, y1;  // both potential outcomes
  std::vector<double> x1, x2, x3;
};

// Deterministic in (scenario, seed); the trait, covariate-noise, and outcome
// draws come from separate substreams, so changing noise_sd alone never
// changes who lands in which stratum or their potential outcomes.
LatentPopulation simulate_population(const SimScenario& scenario, std::uint64_t seed);

// Randomizes offers and reveals one potential outcome per unit; covariates
// x1,x2,x3 ride along. prob_treat is treat_frac (or m/n under complete
// assignment of m offers).
Dataset observe(const LatentPopulation& pop, const SimScenario& scenario,
                std::uint64_t seed);

// Per-stratum mean of Y(1)-Y(0) in the realized population; nullopt for an
// empty stratum. Always-taker entries are exactly 0 by construction.
std::array<std::optional<double>, kNumStrata> true_itt(const LatentPopulation& pop);

// Infinite-population stratum means under each assignment, by quadrature
// over the outcome trait.
struct ScenarioTruth {
  std::array<double, kNumStrata> mean0{};
  std::array<double, kNumStrata> mean1{};
  std::array<double, kNumStrata> itt{};
  double m1 = 0;  // pooled complier mean, treated
  double m0 = 0;
  double cace = 0;
};
ScenarioTruth scenario_truth(const SimScenario& scenario);

// E[logit^-1(beta*U + omega)] for U ~ N(0,1).
double logistic_normal_mean(double beta, double omega);

// --- sweep studies ---------------------------------------------------------

struct NoiseGridConfig {
  std::vector<double> sigma2;  // variance applied to all three covariates
  std::size_t trials = 30;
  int slices = 4;
  int secondary_slices = 3;
  std::uint64_t seed = 0;
  int workers = 0;
};

struct NoiseGridRow {
  double sigma2 = 0;
  std::string plan;  // "none", "x1", "x2", "x3", "x1x3"
  std::size_t trial = 0;
  bool failed = false;
  double width_lqc = 0, width_hqc = 0;  // estimated interval widths
  double pct_lqc = 0, pct_hqc = 0;      // percent of same-trial unsliced width
  double r2 = 0;                        // plan covariate's diagnostic R2
};

// One simulated dataset per (sigma2, trial), analyzed under every plan:
// unsliced, each single covariate, and the x1-by-x3 nested plan. Trials are
// paired across sigma2 values (same traits, same noise draws scaled).
std::vector<NoiseGridRow> run_noise_grid(const SimScenario& scenario,
                                         const NoiseGridConfig& cfg);

struct SampleSizeConfig {
  std::vector<std::size_t> n_list;
  std::size_t trials = 100;
  int slices = 6;
  std::uint64_t seed = 0;
  int workers = 0;
};

struct SampleSizeRow {
  std::size_t n = 0;
  std::string plan;  // "none", "x1"
  std::size_t trial = 0;
  bool failed = false;
  double width_lqc = 0, width_hqc = 0;
};

std::vector<SampleSizeRow> run_sample_size_sweep(const SimScenario& scenario,
                                                 const SampleSizeConfig& cfg);

struct SliceCountConfig {
  std::vector<int> k_list;
  std::size_t trials = 100;
  std::size_t bootstrap_replicates = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int workers = 0;
  // Size of the one-off large population used for per-K reference widths.
  std::size_t oracle_n = 400000;
};

struct SliceCountRow {
  int k = 0;
  std::size_t trial = 0;
  bool failed = false;
  double width_lqc = 0, width_hqc = 0;          // estimated widths
  double adj_width_lqc = 0, adj_width_hqc = 0;  // percentile-adjusted widths
  bool covered_lqc = false;  // adjusted interval contains the true effect
  bool covered_hqc = false;
};

struct SliceCountResult {
  std::vector<SliceCountRow> rows;
  std::vector<double> oracle_width_lqc;  // aligned with cfg.k_list
  std::vector<double> oracle_width_hqc;
  double true_itt_lqc = 0;
  double true_itt_hqc = 0;
};

// Slicing on x1 with K cells per configuration; each trial also runs the
// bootstrap for adjusted widths and true-effect coverage.
SliceCountResult run_slice_count_sweep(const SimScenario& scenario,
                                       const SliceCountConfig& cfg);

}  // namespace stratbound
