#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratbound/dataset.hpp"
#include "stratbound/types.hpp"

namespace stratbound {

// Self-normalizing weighted mean, Σ w v / Σ w. The default estimator
// everywhere; insensitive to rescaling all weights.
double hajek_mean(std::span<const double> values, std::span<const double> weights);

// (1/N) Σ w v with the population size supplied externally. Exposed for
// testing and comparison only — unstable when realized weights drift from N.
double horvitz_thompson_mean(std::span<const double> values,
                             std::span<const double> weights,
                             std::size_t n_population);

// The six directly observable (assignment, category) cells: counts, summed
// weights, within-arm weighted shares, and weighted outcome means.
struct GroupStats {
  std::array<std::size_t, kNumGroups> n{};
  std::array<double, kNumGroups> weight{};
  std::array<double, kNumGroups> p_hat{};                  // within-arm share
  std::array<std::optional<double>, kNumGroups> y_hat{};   // empty cell → nullopt
  std::array<std::size_t, 2> arm_n{};
  std::array<double, 2> arm_weight{};
};

// Throws PreconditionError when either arm is empty. Within-arm shares use a
// shared normalizer, so they sum to 1 exactly per arm.
GroupStats estimate_group_stats(const Dataset& ds);

// Assembles GroupStats from per-cell tallies (counts, summed weights, summed
// weight*value); same arm-empty error as estimate_group_stats.
GroupStats group_stats_from_cells(const std::array<std::size_t, kNumGroups>& n,
                                  const std::array<double, kNumGroups>& weight,
                                  const std::array<double, kNumGroups>& wv);

// Same cell statistics for an arbitrary value column (not required to lie in
// [0,1]). Records whose value is NaN are dropped entirely — shares and means
// are recomputed on the complete-value subset — and counted in *excluded.
GroupStats estimate_group_values(const Dataset& ds, std::span<const double> values,
                                 std::size_t* excluded = nullptr);

// Complier means and bounds built on a proportion smaller than this are
// still computed but flagged unstable.
inline constexpr double kProportionFloor = 1e-6;

struct ProportionResult {
  std::array<double, kNumStrata> pi{};   // clipped to [0,1]
  std::array<double, kNumStrata> raw{};  // as identified
  std::vector<TruncationEvent> truncations;
};

// Stratum shares from the six cell shares: the two complier shares are
// between-arm differences, clipped at 0 when sampling noise drives them
// negative (clipping logged, never an error).
ProportionResult identify_proportions(const GroupStats& gs);

struct StrataEstimates {
  std::array<double, kNumStrata> pi{};
  std::array<double, kNumStrata> pi_raw{};
  std::array<bool, kNumStrata> unstable{};  // share in (0, kProportionFloor)

  // Always-taker means (offer-invariant, so one value per stratum) and the
  // control-side complier means; nullopt when not identified from the data.
  std::optional<double> mu_eat;
  std::optional<double> mu_lqat;
  std::optional<double> mu_hqat;
  std::optional<double> mu_lqc_0;
  std::optional<double> mu_hqc_0;

  std::optional<double> m1;  // pooled complier mean under treatment
  std::optional<double> m0;  // pooled complier mean under control
  bool compliers_unstable = false;

  std::optional<double> cace() const {
    if (m1 && m0) return *m1 - *m0;
    return std::nullopt;
  }

  std::vector<TruncationEvent> truncations;
  std::vector<std::string> warnings;
};

// Mixture-inversion step: always-taker means read directly off single-stratum
// cells, complier control means and the pooled treated mean M1 by
// differencing the two-stratum cells, M0 as the share-weighted average of the
// complier control means. Identified means are clipped to [0,1] (logged).
//
// strict=true (whole-sample analyses): program share not higher under
// treatment → PreconditionError, since no complier quantity is identified.
// strict=false (per-slice use): M1 is left undefined instead.
StrataEstimates identify_control_side(const GroupStats& gs, const ProportionResult& pr,
                                      bool strict = true);

// Full pipeline: cell statistics → shares → means.
StrataEstimates estimate_strata(const Dataset& ds, bool strict = true);

struct StratumValueMeans {
  std::array<std::optional<double>, kNumStrata> mean{};
  std::size_t excluded = 0;  // records dropped for a missing value
};

// Per-stratum means of a pre-treatment covariate via the same mixture
// algebra, with no [0,1] clipping (covariates are unbounded).
StratumValueMeans stratum_covariate_means(const Dataset& ds, const std::string& covariate);

}  // namespace stratbound
