#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "stratbound/slicing.hpp"

namespace stratbound {

struct AnalysisPlan {
  std::optional<SlicePlan> slice;
};

struct AnalysisResult {
  StrataEstimates strata;  // whole-sample point identification
  BoundReport bounds;      // unsliced intervals
  std::optional<SlicedResult> sliced;
  std::vector<std::string> warnings;  // merged from all stages
};

// Whole pipeline on one dataset: strata estimates, unsliced bounds, and —
// when the plan names a covariate — sliced bounds as well.
AnalysisResult analyze(const Dataset& ds, const AnalysisPlan& plan);

// Flat endpoint record of one bounds computation; the unit the bootstrap
// collects per replicate.
struct BoundSnapshot {
  double pi_lqc = 0;
  double pi_hqc = 0;
  double m1 = std::numeric_limits<double>::quiet_NaN();
  double mu_lqc1_lo = 0, mu_lqc1_hi = 1;
  double mu_hqc1_lo = 0, mu_hqc1_hi = 1;
  double itt_lqc_lo = -1, itt_lqc_hi = 1;
  double itt_hqc_lo = -1, itt_hqc_hi = 1;
  bool lqc_vacuous = false;
  bool hqc_vacuous = false;
  bool any_clipped = false;
};

// Throws PreconditionError when an effect interval is undefined (control
// mean missing on a nonvacuous group).
BoundSnapshot snapshot_bounds(const BoundReport& rep);

// Recomputes the analysis on a with-replacement resample given as per-record
// multiplicities, without materializing the resampled dataset. Slice cut
// points are recomputed from each resample. Results are identical to running
// the direct pipeline on the materialized resample (copies ordered by
// original position). run() keeps all scratch local, so one analyzer can
// serve many threads.
class ResampleAnalyzer {
 public:
  ResampleAnalyzer(const Dataset& ds, const AnalysisPlan& plan);

  std::size_t size() const { return n_; }

  // counts[i] = multiplicity of record i. Throws PreconditionError when the
  // resample violates an analysis precondition (empty arm, no compliers,
  // too few distinct slicing values).
  BoundSnapshot run(std::span<const std::uint32_t> counts) const;

 private:
  BoundSnapshot run_unsliced(std::span<const std::uint32_t> counts) const;
  BoundSnapshot run_sliced(std::span<const std::uint32_t> counts) const;

  std::size_t n_ = 0;
  std::optional<SlicePlan> plan_;
  std::vector<std::uint8_t> group_;
  std::vector<std::uint8_t> y_;
  std::vector<double> w_;   // analysis weights
  std::vector<double> qw_;  // quantile-rule weights (w_ or all-ones)
  std::vector<double> sw_;  // share-basis weights (w_ or all-ones)

  // Slicing inputs, copied out of the dataset.
  std::vector<double> pvals_, tvals_, svals_;
  bool has_tie_ = false;
  bool has_secondary_ = false;
  int primary_bins_ = 1;
  int secondary_bins_ = 1;
  std::vector<std::uint8_t> included_;          // complete slicing covariates
  std::vector<std::uint32_t> primary_order_;    // included, sorted (P, T, index)
  std::vector<std::uint32_t> secondary_order_;  // included, sorted (S, T, index)
};

}  // namespace stratbound
