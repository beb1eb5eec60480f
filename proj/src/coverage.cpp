#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stratbound/bootstrap.hpp"
#include "stratbound/rng.hpp"
#include "stratbound/simulation.hpp"

namespace stratbound {

CoverageSummary coverage_experiment(const SimScenario& scenario,
                                    const AnalysisPlan& plan,
                                    const BootstrapConfig& cfg, std::size_t n_trials,
                                    std::uint64_t seed) {
  scenario.validate();
  if (n_trials < 1) throw ConfigError("coverage experiment needs at least one trial");

  const ScenarioTruth truth = scenario_truth(scenario);
  const double true_lqc = truth.itt[static_cast<int>(Stratum::lqc)];
  const double true_hqc = truth.itt[static_cast<int>(Stratum::hqc)];

  std::size_t ok = 0, failed = 0;
  std::size_t raw_l = 0, raw_h = 0, raw_b = 0;
  std::size_t adj_l = 0, adj_h = 0, adj_b = 0;

#ifdef _OPENMP
  const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads) \
    reduction(+ : ok, failed, raw_l, raw_h, raw_b, adj_l, adj_h, adj_b)
#endif
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(n_trials); ++t) {
    const std::uint64_t pop_seed = derive_key(seed, Stream::scenario, t);
    BootstrapConfig bc = cfg;
    bc.seed = derive_key(seed, Stream::resample, t);
    bc.workers = 1;  // trials are the parallel unit here
    try {
      const LatentPopulation pop = simulate_population(scenario, pop_seed);
      const Dataset ds = observe(pop, scenario, pop_seed);
      const AdjustedBounds adj = bootstrap_bounds(ds, plan, bc);
      const bool rl = adj.raw.itt_lqc_lo <= true_lqc && true_lqc <= adj.raw.itt_lqc_hi;
      const bool rh = adj.raw.itt_hqc_lo <= true_hqc && true_hqc <= adj.raw.itt_hqc_hi;
      const bool al = adj.itt_lqc.lo <= true_lqc && true_lqc <= adj.itt_lqc.hi;
      const bool ah = adj.itt_hqc.lo <= true_hqc && true_hqc <= adj.itt_hqc.hi;
      ++ok;
      raw_l += rl;
      raw_h += rh;
      raw_b += rl && rh;
      adj_l += al;
      adj_h += ah;
      adj_b += al && ah;
    } catch (const Error&) {
      ++failed;
    }
  }

  CoverageSummary out;
  out.trials = ok;
  out.failed_trials = failed;
  out.true_itt_lqc = true_lqc;
  out.true_itt_hqc = true_hqc;
  out.raw_lqc = raw_l;
  out.raw_hqc = raw_h;
  out.raw_both = raw_b;
  out.adj_lqc = adj_l;
  out.adj_hqc = adj_h;
  out.adj_both = adj_b;
  return out;
}

}  // namespace stratbound
