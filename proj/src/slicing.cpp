#include "stratbound/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stratbound {

namespace {

constexpr int kMaxBins = 30;
constexpr int iLqc = static_cast<int>(Stratum::lqc);
constexpr int iHqc = static_cast<int>(Stratum::hqc);

// Midpoint-of-cumulative-weight binning: record occupying weight interval
// [c, c+w) of total W goes to bin floor(K * (c + w/2) / W).
void midpoint_bins(const std::vector<std::uint32_t>& order,
                   const std::vector<double>& weight, int bins,
                   std::vector<int>& bin_out) {
  double total = 0;
  for (std::uint32_t i : order) total += weight[i];
  bin_out.resize(order.size());
  double cum = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    double w = weight[order[k]];
    double mid = cum + w / 2;
    int b = static_cast<int>(mid / total * bins);
    bin_out[k] = std::min(bins - 1, std::max(0, b));
    cum += w;
  }
}

std::size_t count_distinct_pairs(const std::vector<std::uint32_t>& order,
                                 const std::vector<double>& key,
                                 const std::vector<double>* tie) {
  std::size_t distinct = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || key[order[k]] != key[order[k - 1]] ||
        (tie && (*tie)[order[k]] != (*tie)[order[k - 1]])) {
      ++distinct;
    }
  }
  return distinct;
}

void sort_by_key(std::vector<std::uint32_t>& order, const std::vector<double>& key,
                 const std::vector<double>* tie) {
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    if (tie && (*tie)[a] != (*tie)[b]) return (*tie)[a] < (*tie)[b];
    return a < b;
  });
}

}  // namespace

SliceAssignment assign_slices(const Dataset& ds, const SlicePlan& plan) {
  if (plan.primary_bins < 1 || plan.primary_bins > kMaxBins) {
    throw ConfigError("primary slice count must be between 1 and " +
                      std::to_string(kMaxBins));
  }
  if (plan.secondary_covariate &&
      (plan.secondary_bins < 1 || plan.secondary_bins > kMaxBins)) {
    throw ConfigError("secondary slice count must be between 1 and " +
                      std::to_string(kMaxBins));
  }
  const std::vector<double>* primary = ds.covariate(plan.primary_covariate);
  if (!primary) throw ConfigError("no such covariate: " + plan.primary_covariate);
  const std::vector<double>* tie = nullptr;
  if (plan.tie_breaker) {
    tie = ds.covariate(*plan.tie_breaker);
    if (!tie) throw ConfigError("no such covariate: " + *plan.tie_breaker);
  }
  const std::vector<double>* secondary = nullptr;
  if (plan.secondary_covariate) {
    secondary = ds.covariate(*plan.secondary_covariate);
    if (!secondary) throw ConfigError("no such covariate: " + *plan.secondary_covariate);
  }

  SliceAssignment out;
  out.primary_bins = plan.primary_bins;
  out.secondary_bins = secondary ? plan.secondary_bins : 1;
  out.n_cells = out.primary_bins * out.secondary_bins;
  out.cell.assign(ds.size(), -1);

  std::vector<std::uint32_t> included;
  included.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    bool ok = !std::isnan((*primary)[i]) && (!tie || !std::isnan((*tie)[i])) &&
              (!secondary || !std::isnan((*secondary)[i]));
    if (ok) {
      included.push_back(static_cast<std::uint32_t>(i));
    } else {
      ++out.excluded;
    }
  }
  if (included.empty()) {
    throw PreconditionError("no records with complete slicing covariates");
  }

  std::vector<double> weight(ds.size(), 1.0);
  if (plan.weighted_quantiles) {
    for (std::uint32_t i : included) weight[i] = ds.weight(i);
  }

  sort_by_key(included, *primary, tie);
  if (static_cast<std::size_t>(plan.primary_bins) >
      count_distinct_pairs(included, *primary, tie)) {
    throw PreconditionError(
        "slice count exceeds the number of distinct covariate/tie-breaker values");
  }

  std::vector<int> pbin;
  midpoint_bins(included, weight, plan.primary_bins, pbin);

  // First value landing in each later bin, padded when trailing bins are
  // empty (possible under extreme weights).
  int prev = 0;
  for (std::size_t k = 0; k < included.size(); ++k) {
    while (prev < pbin[k]) {
      ++prev;
      out.primary_edges.push_back((*primary)[included[k]]);
    }
  }
  while (static_cast<int>(out.primary_edges.size()) < plan.primary_bins - 1) {
    out.primary_edges.push_back((*primary)[included.back()]);
  }

  if (!secondary) {
    for (std::size_t k = 0; k < included.size(); ++k) {
      out.cell[included[k]] = pbin[k];
    }
    return out;
  }

  out.secondary_edges.assign(plan.primary_bins, {});
  for (int b = 0; b < plan.primary_bins; ++b) {
    std::vector<std::uint32_t> members;
    for (std::size_t k = 0; k < included.size(); ++k) {
      if (pbin[k] == b) members.push_back(included[k]);
    }
    if (members.empty()) continue;
    sort_by_key(members, *secondary, tie);
    if (static_cast<std::size_t>(plan.secondary_bins) >
        count_distinct_pairs(members, *secondary, tie)) {
      throw PreconditionError(
          "secondary slice count exceeds the distinct values in primary slice " +
          std::to_string(b + 1));
    }
    std::vector<int> sbin;
    midpoint_bins(members, weight, plan.secondary_bins, sbin);
    int sprev = 0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      while (sprev < sbin[k]) {
        ++sprev;
        out.secondary_edges[b].push_back((*secondary)[members[k]]);
      }
      out.cell[members[k]] = b * plan.secondary_bins + sbin[k];
    }
    while (static_cast<int>(out.secondary_edges[b].size()) < plan.secondary_bins - 1) {
      out.secondary_edges[b].push_back((*secondary)[members.back()]);
    }
  }
  return out;
}

AggregatedBounds aggregate_slices(std::span<const SliceInput> slices) {
  AggregatedBounds agg;
  agg.weight_lqc.assign(slices.size(), 0.0);
  agg.weight_hqc.assign(slices.size(), 0.0);

  for (const SliceInput& sl : slices) {
    for (int r = 0; r < kNumStrata; ++r) agg.pi[r] += sl.share * sl.strata.pi[r];
  }
  const double pi_l = agg.pi[iLqc];
  const double pi_h = agg.pi[iHqc];

  double m1_num = 0, m1_den = 0;
  for (const SliceInput& sl : slices) {
    double cs = sl.strata.pi[iLqc] + sl.strata.pi[iHqc];
    if (sl.strata.m1 && cs > 0) {
      m1_num += sl.share * cs * *sl.strata.m1;
      m1_den += sl.share * cs;
    }
  }
  if (m1_den > 0) agg.m1 = m1_num / m1_den;

  struct EndpointAccum {
    double lo = 0, hi = 0, raw_lo = 0, raw_hi = 0;
    bool clipped_lo = false, clipped_hi = false;
    double mu0 = 0;
    bool mu0_defined = true;
    double wsum = 0;
  } acc_l, acc_h;

  for (std::size_t k = 0; k < slices.size(); ++k) {
    const StrataEstimates& st = slices[k].strata;
    double pil = st.pi[iLqc], pih = st.pi[iHqc];
    if (!st.m1 || pil + pih <= 0) continue;
    auto [lq, hq] = complier_mean_bounds(pil, pih, *st.m1);
    if (pi_l > 0 && pil > 0) {
      double w = slices[k].share * pil / pi_l;
      agg.weight_lqc[k] = w;
      acc_l.lo += w * lq.lo;
      acc_l.hi += w * lq.hi;
      acc_l.raw_lo += w * lq.raw_lo;
      acc_l.raw_hi += w * lq.raw_hi;
      acc_l.clipped_lo |= lq.clipped_lo;
      acc_l.clipped_hi |= lq.clipped_hi;
      if (st.mu_lqc_0) acc_l.mu0 += w * *st.mu_lqc_0;
      else acc_l.mu0_defined = false;
      acc_l.wsum += w;
    }
    if (pi_h > 0 && pih > 0) {
      double w = slices[k].share * pih / pi_h;
      agg.weight_hqc[k] = w;
      acc_h.lo += w * hq.lo;
      acc_h.hi += w * hq.hi;
      acc_h.raw_lo += w * hq.raw_lo;
      acc_h.raw_hi += w * hq.raw_hi;
      acc_h.clipped_lo |= hq.clipped_lo;
      acc_h.clipped_hi |= hq.clipped_hi;
      if (st.mu_hqc_0) acc_h.mu0 += w * *st.mu_hqc_0;
      else acc_h.mu0_defined = false;
      acc_h.wsum += w;
    }
  }

  BoundReport& rep = agg.report;
  rep.pi_lqc = pi_l;
  rep.pi_hqc = pi_h;
  rep.m1 = agg.m1.value_or(std::numeric_limits<double>::quiet_NaN());
  rep.width_ratio_lqc =
      pi_l > 0 ? pi_h / pi_l : std::numeric_limits<double>::infinity();
  rep.width_ratio_hqc =
      pi_h > 0 ? pi_l / pi_h : std::numeric_limits<double>::infinity();

  auto fill = [](const EndpointAccum& a) {
    BoundInterval b;
    if (a.wsum <= 0) {
      b.lo = b.raw_lo = 0;
      b.hi = b.raw_hi = 1;
      b.vacuous = true;
      return b;
    }
    b.lo = a.lo;
    b.hi = a.hi;
    b.raw_lo = a.raw_lo;
    b.raw_hi = a.raw_hi;
    b.clipped_lo = a.clipped_lo;
    b.clipped_hi = a.clipped_hi;
    return b;
  };
  rep.mu_lqc1 = fill(acc_l);
  rep.mu_hqc1 = fill(acc_h);

  if (acc_l.wsum > 0 && acc_l.mu0_defined) agg.mu_lqc_0 = acc_l.mu0;
  if (acc_h.wsum > 0 && acc_h.mu0_defined) agg.mu_hqc_0 = acc_h.mu0;
  rep.mu_lqc_0 = agg.mu_lqc_0;
  rep.mu_hqc_0 = agg.mu_hqc_0;

  auto shift = [](const BoundInterval& mean, std::optional<double> mu0,
                  bool vac) -> std::optional<BoundInterval> {
    if (vac) {
      BoundInterval b;
      b.lo = b.raw_lo = -1;
      b.hi = b.raw_hi = 1;
      b.vacuous = true;
      return b;
    }
    if (!mu0) return std::nullopt;
    BoundInterval b = mean;
    b.lo -= *mu0;
    b.hi -= *mu0;
    b.raw_lo -= *mu0;
    b.raw_hi -= *mu0;
    return b;
  };
  rep.itt_lqc = shift(rep.mu_lqc1, agg.mu_lqc_0, rep.mu_lqc1.vacuous);
  rep.itt_hqc = shift(rep.mu_hqc1, agg.mu_hqc_0, rep.mu_hqc1.vacuous);

  if (!rep.mu_lqc1.vacuous && !rep.mu_hqc1.vacuous && agg.mu_lqc_0 && agg.mu_hqc_0) {
    TradeoffSegment seg;
    seg.at_lqc_low = {rep.mu_lqc1.lo - *agg.mu_lqc_0, rep.mu_hqc1.hi - *agg.mu_hqc_0};
    seg.at_lqc_high = {rep.mu_lqc1.hi - *agg.mu_lqc_0, rep.mu_hqc1.lo - *agg.mu_hqc_0};
    rep.segment = seg;
  }
  return agg;
}

SliceOutcome evaluate_slice(const CellStats& cell) {
  SliceOutcome out;
  GroupStats gs;
  for (int g = 0; g < kNumGroups; ++g) {
    int z = g / kNumSchools;
    gs.n[g] = cell.n[g];
    gs.weight[g] = cell.weight[g];
    gs.arm_n[z] += cell.n[g];
    gs.arm_weight[z] += cell.weight[g];
  }
  if (gs.arm_n[0] == 0 || gs.arm_n[1] == 0) {
    out.arm_missing = true;
    return out;
  }
  for (int g = 0; g < kNumGroups; ++g) {
    int z = g / kNumSchools;
    gs.p_hat[g] = gs.arm_weight[z] > 0 ? gs.weight[g] / gs.arm_weight[z] : 0.0;
    if (gs.n[g] > 0 && gs.weight[g] > 0) gs.y_hat[g] = cell.wy[g] / gs.weight[g];
  }
  StrataEstimates est =
      identify_control_side(gs, identify_proportions(gs), /*strict=*/false);
  if (!est.m1) {
    out.consistency_zeroed = true;
    est.pi[iLqc] = 0;
    est.pi[iHqc] = 0;
    est.warnings.push_back(
        "program share not higher under treatment; complier shares zeroed");
  }
  out.strata = std::move(est);
  return out;
}

SlicedResult sliced_bounds(const Dataset& ds, const SlicePlan& plan,
                           const SliceAssignment& cells) {
  SlicedResult res;
  res.assignment = cells;

  std::vector<CellStats> acc(cells.n_cells);
  std::size_t n_included = 0;
  double w_included = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int c = cells.cell[i];
    if (c < 0) continue;
    int g = ds.group(i);
    double w = ds.weight(i);
    ++acc[c].n[g];
    acc[c].weight[g] += w;
    acc[c].wy[g] += w * ds.y(i);
    ++acc[c].count;
    acc[c].share_weight += plan.weighted_shares ? w : 1.0;
    ++n_included;
    w_included += plan.weighted_shares ? w : 1.0;
  }
  if (cells.excluded > 0) {
    res.warnings.push_back(std::to_string(cells.excluded) +
                           " record(s) dropped for missing slicing covariates");
  }

  std::vector<SliceInput> inputs;
  inputs.reserve(cells.n_cells);
  for (int c = 0; c < cells.n_cells; ++c) {
    SliceSummary sum;
    sum.primary_bin = c / cells.secondary_bins;
    sum.secondary_bin = c % cells.secondary_bins;
    sum.label = plan.primary_covariate + " q" + std::to_string(sum.primary_bin + 1) +
                "/" + std::to_string(cells.primary_bins);
    if (plan.secondary_covariate) {
      sum.label += " " + *plan.secondary_covariate + " q" +
                   std::to_string(sum.secondary_bin + 1) + "/" +
                   std::to_string(cells.secondary_bins);
    }
    sum.n = acc[c].count;
    sum.share = w_included > 0 ? acc[c].share_weight / w_included : 0.0;

    SliceInput in;
    in.share = sum.share;
    SliceOutcome outcome = evaluate_slice(acc[c]);
    sum.arm_missing = outcome.arm_missing;
    sum.consistency_zeroed = outcome.consistency_zeroed;
    if (outcome.arm_missing) {
      res.warnings.push_back("slice " + sum.label +
                             ": an assignment arm is empty; slice carries no weight");
    } else {
      if (outcome.consistency_zeroed) {
        res.warnings.push_back(
            "slice " + sum.label +
            ": program share not higher under treatment; complier shares zeroed");
      }
      const StrataEstimates& est = *outcome.strata;
      if (est.m1 && est.pi[iLqc] + est.pi[iHqc] > 0) {
        sum.bounds = make_bound_report(est);
      }
      sum.strata = est;
      in.strata = std::move(*outcome.strata);
    }
    inputs.push_back(std::move(in));
    res.slices.push_back(std::move(sum));
  }

  res.aggregate = aggregate_slices(inputs);
  for (std::size_t k = 0; k < res.slices.size(); ++k) {
    res.slices[k].weight_lqc = res.aggregate.weight_lqc[k];
    res.slices[k].weight_hqc = res.aggregate.weight_hqc[k];
  }
  if (res.aggregate.report.mu_lqc1.vacuous) {
    res.warnings.push_back("all slices vacuous for lq compliers; aggregate is vacuous");
  }
  if (res.aggregate.report.mu_hqc1.vacuous) {
    res.warnings.push_back("all slices vacuous for hq compliers; aggregate is vacuous");
  }
  return res;
}

SlicedResult sliced_bounds(const Dataset& ds, const SlicePlan& plan) {
  return sliced_bounds(ds, plan, assign_slices(ds, plan));
}

SlicedResult nested_slice_bounds(const Dataset& ds, const SlicePlan& plan) {
  if (!plan.secondary_covariate) {
    throw ConfigError("nested slicing requires a secondary covariate");
  }
  return sliced_bounds(ds, plan);
}

}  // namespace stratbound
