#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stratbound/analysis.hpp"

namespace stratbound {

struct BootstrapConfig {
  std::size_t replicates = 1000;
  double alpha = 0.05;  // lower endpoints take the alpha quantile, upper the 1-alpha
  std::uint64_t seed = 0;
  int workers = 0;  // 0 = library default
};

struct ReplicateRecord {
  std::uint32_t index = 0;
  bool failed = false;
  std::string failure;
  BoundSnapshot snapshot;  // meaningful only when !failed
};

struct AdjustedInterval {
  double lo = 0;
  double hi = 0;
};

// Raw point bounds plus percentile-rule uncertainty envelopes: the adjusted
// lower endpoint is the alpha-quantile of replicate lower endpoints, the
// adjusted upper endpoint the (1-alpha)-quantile of replicate uppers.
struct AdjustedBounds {
  BoundSnapshot raw;
  AdjustedInterval itt_lqc, itt_hqc;
  AdjustedInterval mu_lqc1, mu_hqc1;
  std::size_t requested = 0;
  std::size_t failures = 0;
  std::size_t vacuous_lqc = 0;  // successful replicates with a vacuous group
  std::size_t vacuous_hqc = 0;
  std::size_t clipped = 0;  // successful replicates where a clip bound
  std::vector<std::string> warnings;
};

// Quantile convention on an ascending-sorted endpoint sample: index
// ceil(alpha*n)-1 (0-based, clamped). Deterministic, no interpolation.
double percentile_lower(std::span<const double> sorted, double alpha);
// Index ceil((1-alpha)*n)-1.
double percentile_upper(std::span<const double> sorted, double alpha);

// Case-resampling bootstrap: each replicate draws N records with replacement
// (keeping their weights), reruns the full analysis — including re-slicing on
// the resample's own quantiles — and the endpoint quantiles are taken across
// successful replicates. Replicates failing a precondition are counted and
// excluded; more than half failing is a hard error. Replicate r's resample
// depends only on (seed, r), so results are identical at any worker count.
// When dump is non-null it receives one record per replicate, in order.
AdjustedBounds bootstrap_bounds(const Dataset& ds, const AnalysisPlan& plan,
                                const BootstrapConfig& cfg,
                                std::vector<ReplicateRecord>* dump = nullptr);

struct SimScenario;

struct CoverageSummary {
  std::size_t trials = 0;
  std::size_t failed_trials = 0;  // trials whose point analysis failed
  double true_itt_lqc = 0;
  double true_itt_hqc = 0;
  // Counts of trials whose interval contained the true effect.
  std::size_t raw_lqc = 0, raw_hqc = 0, raw_both = 0;
  std::size_t adj_lqc = 0, adj_hqc = 0, adj_both = 0;

  double raw_rate_lqc() const { return trials ? double(raw_lqc) / trials : 0; }
  double raw_rate_hqc() const { return trials ? double(raw_hqc) / trials : 0; }
  double adj_rate_lqc() const { return trials ? double(adj_lqc) / trials : 0; }
  double adj_rate_hqc() const { return trials ? double(adj_hqc) / trials : 0; }
  double adj_rate_both() const { return trials ? double(adj_both) / trials : 0; }
};

// Repeatedly simulates a dataset from the scenario, runs the bootstrap, and
// checks whether the scenario's true stratum effects fall inside the raw and
// adjusted intervals. Trial t derives its data and bootstrap seeds from
// (seed, t).
CoverageSummary coverage_experiment(const SimScenario& scenario,
                                    const AnalysisPlan& plan,
                                    const BootstrapConfig& cfg, std::size_t n_trials,
                                    std::uint64_t seed);

}  // namespace stratbound
