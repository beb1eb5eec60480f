#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratbound/bounds.hpp"
#include "stratbound/dataset.hpp"
#include "stratbound/estimators.hpp"

namespace stratbound {

struct SlicePlan {
  std::string primary_covariate;
  int primary_bins = 4;
  std::optional<std::string> secondary_covariate;
  int secondary_bins = 3;  // per primary bin
  std::optional<std::string> tie_breaker;
  // Quantile cut points honor design weights by default; raw record-count
  // quantiles are available for comparison with unweighted analyses.
  bool weighted_quantiles = true;
  // Slice shares in the aggregation likewise default to weighted shares.
  bool weighted_shares = true;

  int total_cells() const {
    return primary_bins * (secondary_covariate ? secondary_bins : 1);
  }
};

struct SliceAssignment {
  int primary_bins = 1;
  int secondary_bins = 1;  // 1 when the plan has no secondary covariate
  int n_cells = 1;
  // Per record: primary_bin * secondary_bins + secondary_bin, or -1 when a
  // needed covariate is missing.
  std::vector<std::int32_t> cell;
  std::size_t excluded = 0;
  // First covariate value landing in bins 1..K-1, for reporting.
  std::vector<double> primary_edges;
  std::vector<std::vector<double>> secondary_edges;  // per primary bin
};

// Ranks records by (covariate, tie-breaker, input order) and cuts the
// cumulative weight into equal parts: a record is binned by the midpoint of
// the weight interval it occupies, so bin populations match as closely as
// the weights allow. Requires at least primary_bins distinct
// (covariate, tie-breaker) value pairs; same rule per bin for the secondary.
SliceAssignment assign_slices(const Dataset& ds, const SlicePlan& plan);

// One slice's estimation input for aggregation: its share of the included
// population and its identified strata quantities.
struct SliceInput {
  double share = 0;
  StrataEstimates strata;
};

struct AggregatedBounds {
  std::array<double, kNumStrata> pi{};  // post-stratified: share-weighted sums
  std::optional<double> m1;             // complier-share-weighted slice means
  std::optional<double> mu_lqc_0;
  std::optional<double> mu_hqc_0;
  BoundReport report;  // intervals are weighted sums of slice endpoints
  // Aggregation weight of each input slice for the two complier groups;
  // zero for vacuous slices, sums to 1 otherwise.
  std::vector<double> weight_lqc;
  std::vector<double> weight_hqc;
};

// Endpoint-wise weighted aggregation with weights share_k * pi_r^k / pi_r.
// Slices whose pooled treated complier mean is undefined contribute zero
// complier weight. The aggregated endpoint pairs satisfy the same linear
// feasibility constraint as a single slice, with the post-stratified shares
// and pooled mean.
AggregatedBounds aggregate_slices(std::span<const SliceInput> slices);

// Raw per-cell tallies, filled either record-by-record or (in the
// resampling path) copy-by-copy.
struct CellStats {
  std::array<std::size_t, kNumGroups> n{};
  std::array<double, kNumGroups> weight{};
  std::array<double, kNumGroups> wy{};
  std::size_t count = 0;
  double share_weight = 0;  // numerator of this cell's share, caller's basis
};

struct SliceOutcome {
  std::optional<StrataEstimates> strata;  // nullopt when an arm is missing
  bool arm_missing = false;
  bool consistency_zeroed = false;
};

// Per-slice estimation conventions shared by the direct and resampling
// paths: a slice missing a whole assignment arm carries no estimates; a
// slice whose program share is not higher under treatment keeps its
// always-taker shares but has its complier shares zeroed (so it aggregates
// with zero weight).
SliceOutcome evaluate_slice(const CellStats& cell);

struct SliceSummary {
  std::string label;
  int primary_bin = 0;
  int secondary_bin = 0;
  std::size_t n = 0;
  double share = 0;
  bool arm_missing = false;       // a whole assignment arm absent in the slice
  bool consistency_zeroed = false;  // program share not higher under treatment
  std::optional<StrataEstimates> strata;
  std::optional<BoundReport> bounds;  // absent when both complier shares are 0
  double weight_lqc = 0;
  double weight_hqc = 0;
};

struct SlicedResult {
  SliceAssignment assignment;
  std::vector<SliceSummary> slices;
  AggregatedBounds aggregate;
  std::vector<std::string> warnings;
};

// Full pipeline: assign cells, estimate every slice (empty-arm and
// inconsistent slices become zero-weight vacuous contributions rather than
// failures), aggregate.
SlicedResult sliced_bounds(const Dataset& ds, const SlicePlan& plan);
SlicedResult sliced_bounds(const Dataset& ds, const SlicePlan& plan,
                           const SliceAssignment& cells);

// Same with the plan's secondary covariate required, splitting each primary
// bin into secondary_bins cells on the secondary covariate's within-bin
// quantiles.
SlicedResult nested_slice_bounds(const Dataset& ds, const SlicePlan& plan);

}  // namespace stratbound
