#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stratbound/estimators.hpp"
#include "stratbound/types.hpp"

namespace stratbound {

struct BoundInterval {
  double lo = 0;
  double hi = 0;
  double raw_lo = 0;  // before clipping to the outcome support
  double raw_hi = 0;
  bool clipped_lo = false;
  bool clipped_hi = false;
  // The data say nothing: full-support interval carried with weight 0.
  bool vacuous = false;

  double width() const { return hi - lo; }
};

struct SegmentPoint {
  double itt_lqc = 0;
  double itt_hqc = 0;
};

// The treatment means of the two complier groups are not separately
// identified, but their share-weighted average is pinned, so the feasible
// pairs form a negatively sloped segment; stored in effect coordinates.
struct TradeoffSegment {
  SegmentPoint at_lqc_low;   // lq effect at its lower endpoint, hq at its upper
  SegmentPoint at_lqc_high;  // and vice versa
};

// Sharp intervals for the two unobserved complier treatment means given
// their population shares and pooled mean m1, over outcomes supported on
// [support_lo, support_hi]. Returns (lq-complier, hq-complier).
//
// One share zero → the other group's interval collapses to the point m1 and
// the empty group's interval is the full support, flagged vacuous. Both
// zero → PreconditionError.
std::pair<BoundInterval, BoundInterval> complier_mean_bounds(double pi_lqc,
                                                             double pi_hqc, double m1,
                                                             double support_lo = 0.0,
                                                             double support_hi = 1.0);

// Effect intervals: treatment-mean bounds (already clipped) shifted by the
// identified control mean. Undefined control mean → undefined interval.
std::pair<std::optional<BoundInterval>, std::optional<BoundInterval>> itt_bounds(
    const BoundInterval& mu_lqc1, const BoundInterval& mu_hqc1,
    std::optional<double> mu_lqc_0, std::optional<double> mu_hqc_0);

// Feasible-extreme pairs; each endpoint satisfies
// pi_lqc*mu_lqc(1) + pi_hqc*mu_hqc(1) = (pi_lqc+pi_hqc)*m1 exactly.
// Requires both shares positive and both control means supplied.
TradeoffSegment tradeoff_segment(double pi_lqc, double pi_hqc, double m1,
                                 double mu_lqc_0, double mu_hqc_0);

struct BoundReport {
  double pi_lqc = 0;
  double pi_hqc = 0;
  double m1 = 0;
  std::optional<double> mu_lqc_0;
  std::optional<double> mu_hqc_0;
  BoundInterval mu_lqc1;
  BoundInterval mu_hqc1;
  std::optional<BoundInterval> itt_lqc;
  std::optional<BoundInterval> itt_hqc;
  std::optional<TradeoffSegment> segment;
  // Pre-clip interval widths: width_ratio_lqc = pi_hqc/pi_lqc, and reciprocal.
  double width_ratio_lqc = 0;
  double width_ratio_hqc = 0;
  std::vector<std::string> warnings;
};

// Bundles the full bound set for identified strata estimates. Throws
// PreconditionError when m1 is undefined or no compliers exist.
BoundReport make_bound_report(const StrataEstimates& est);

struct OracleBounds {
  BoundInterval lqc;
  BoundInterval hqc;
};

// Independent check used by the tests: with latent labels and every treated
// outcome known, the extremes come from sorting the treated-complier
// outcomes and filling one group with the best (or worst) until its known
// count is reached. Matches the analytic intervals exactly for binary
// outcomes.
OracleBounds sharp_bound_oracle(std::span<const Stratum> strata,
                                std::span<const double> y_treated);

}  // namespace stratbound
