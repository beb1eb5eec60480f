#include "stratbound/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace stratbound {

AnalysisResult analyze(const Dataset& ds, const AnalysisPlan& plan) {
  AnalysisResult out;
  out.strata = estimate_strata(ds);
  out.bounds = make_bound_report(out.strata);
  out.warnings.insert(out.warnings.end(), out.strata.warnings.begin(),
                      out.strata.warnings.end());
  out.warnings.insert(out.warnings.end(), out.bounds.warnings.begin(),
                      out.bounds.warnings.end());
  if (plan.slice) {
    out.sliced = sliced_bounds(ds, *plan.slice);
    out.warnings.insert(out.warnings.end(), out.sliced->warnings.begin(),
                        out.sliced->warnings.end());
  }
  return out;
}

BoundSnapshot snapshot_bounds(const BoundReport& rep) {
  BoundSnapshot s;
  s.pi_lqc = rep.pi_lqc;
  s.pi_hqc = rep.pi_hqc;
  s.m1 = rep.m1;
  s.mu_lqc1_lo = rep.mu_lqc1.lo;
  s.mu_lqc1_hi = rep.mu_lqc1.hi;
  s.mu_hqc1_lo = rep.mu_hqc1.lo;
  s.mu_hqc1_hi = rep.mu_hqc1.hi;
  s.lqc_vacuous = rep.mu_lqc1.vacuous;
  s.hqc_vacuous = rep.mu_hqc1.vacuous;
  if (!rep.itt_lqc || !rep.itt_hqc) {
    throw PreconditionError("effect interval undefined: missing control mean");
  }
  s.itt_lqc_lo = rep.itt_lqc->lo;
  s.itt_lqc_hi = rep.itt_lqc->hi;
  s.itt_hqc_lo = rep.itt_hqc->lo;
  s.itt_hqc_hi = rep.itt_hqc->hi;
  s.any_clipped = rep.mu_lqc1.clipped_lo || rep.mu_lqc1.clipped_hi ||
                  rep.mu_hqc1.clipped_lo || rep.mu_hqc1.clipped_hi;
  return s;
}

namespace {

void sort_by(std::vector<std::uint32_t>& order, const std::vector<double>& key,
             const std::vector<double>* tie) {
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    if (tie && (*tie)[a] != (*tie)[b]) return (*tie)[a] < (*tie)[b];
    return a < b;
  });
}

}  // namespace

ResampleAnalyzer::ResampleAnalyzer(const Dataset& ds, const AnalysisPlan& plan)
    : n_(ds.size()), plan_(plan.slice) {
  group_.resize(n_);
  y_.resize(n_);
  w_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    group_[i] = static_cast<std::uint8_t>(ds.group(i));
    y_[i] = static_cast<std::uint8_t>(ds.y(i));
    w_[i] = ds.weight(i);
  }
  if (!plan_) return;

  const SlicePlan& sp = *plan_;
  // Validate names and bin counts once, with the same errors as the direct
  // path.
  SliceAssignment probe = assign_slices(ds, sp);
  primary_bins_ = probe.primary_bins;
  secondary_bins_ = probe.secondary_bins;

  qw_.assign(n_, 1.0);
  if (sp.weighted_quantiles) qw_ = w_;
  sw_.assign(n_, 1.0);
  if (sp.weighted_shares) sw_ = w_;

  pvals_ = *ds.covariate(sp.primary_covariate);
  if (sp.tie_breaker) {
    has_tie_ = true;
    tvals_ = *ds.covariate(*sp.tie_breaker);
  }
  if (sp.secondary_covariate) {
    has_secondary_ = true;
    svals_ = *ds.covariate(*sp.secondary_covariate);
  }

  included_.assign(n_, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    bool ok = !std::isnan(pvals_[i]) && (!has_tie_ || !std::isnan(tvals_[i])) &&
              (!has_secondary_ || !std::isnan(svals_[i]));
    included_[i] = ok ? 1 : 0;
    if (ok) primary_order_.push_back(static_cast<std::uint32_t>(i));
  }
  secondary_order_ = primary_order_;
  sort_by(primary_order_, pvals_, has_tie_ ? &tvals_ : nullptr);
  if (has_secondary_) {
    sort_by(secondary_order_, svals_, has_tie_ ? &tvals_ : nullptr);
  }
}

BoundSnapshot ResampleAnalyzer::run(std::span<const std::uint32_t> counts) const {
  if (counts.size() != n_) throw PreconditionError("multiplicity vector length mismatch");
  return plan_ ? run_sliced(counts) : run_unsliced(counts);
}

BoundSnapshot ResampleAnalyzer::run_unsliced(
    std::span<const std::uint32_t> counts) const {
  std::array<std::size_t, kNumGroups> n{};
  std::array<double, kNumGroups> weight{};
  std::array<double, kNumGroups> wy{};
  for (std::size_t i = 0; i < n_; ++i) {
    std::uint32_t c = counts[i];
    if (c == 0) continue;
    int g = group_[i];
    double w = c * w_[i];
    n[g] += c;
    weight[g] += w;
    wy[g] += w * y_[i];
  }
  GroupStats gs = group_stats_from_cells(n, weight, wy);
  StrataEstimates est =
      identify_control_side(gs, identify_proportions(gs), /*strict=*/true);
  return snapshot_bounds(make_bound_report(est));
}

BoundSnapshot ResampleAnalyzer::run_sliced(std::span<const std::uint32_t> counts) const {
  const int K = primary_bins_;
  const int L = secondary_bins_;

  // Distinct (value, tie) pairs present in the resample.
  std::size_t distinct = 0;
  bool have_last = false;
  double last_p = 0, last_t = 0;
  double total_qw = 0;
  for (std::uint32_t i : primary_order_) {
    if (counts[i] == 0) continue;
    double t = has_tie_ ? tvals_[i] : 0.0;
    if (!have_last || pvals_[i] != last_p || t != last_t) {
      ++distinct;
      have_last = true;
      last_p = pvals_[i];
      last_t = t;
    }
    total_qw += counts[i] * qw_[i];
  }
  if (distinct < static_cast<std::size_t>(K)) {
    throw PreconditionError(
        "slice count exceeds the number of distinct covariate/tie-breaker values");
  }

  // Copy-level primary bins, stored flat in original-record order.
  std::vector<std::uint32_t> offset(n_ + 1, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    offset[i + 1] = offset[i] + (included_[i] ? counts[i] : 0);
  }
  std::vector<std::int8_t> copy_pbin(offset[n_]);
  std::vector<double> bin_qw(K, 0.0);

  std::vector<CellStats> cells(K * L);
  double cum = 0;
  for (std::uint32_t i : primary_order_) {
    std::uint32_t c = counts[i];
    if (c == 0) continue;
    double w = qw_[i];
    for (std::uint32_t k = 0; k < c; ++k) {
      double mid = cum + (k + 0.5) * w;
      int b = std::min(K - 1, std::max(0, static_cast<int>(mid / total_qw * K)));
      copy_pbin[offset[i] + k] = static_cast<std::int8_t>(b);
      bin_qw[b] += w;
      if (!has_secondary_) {
        CellStats& cell = cells[b];
        int g = group_[i];
        ++cell.n[g];
        cell.weight[g] += w_[i];
        cell.wy[g] += w_[i] * y_[i];
        ++cell.count;
        cell.share_weight += sw_[i];
      }
    }
    cum += c * w;
  }

  if (has_secondary_) {
    std::vector<double> bin_cum(K, 0.0);
    std::vector<std::size_t> bin_distinct(K, 0);
    std::vector<double> bin_last_s(K, 0.0), bin_last_t(K, 0.0);
    std::vector<std::uint8_t> bin_have(K, 0);
    for (std::uint32_t i : secondary_order_) {
      std::uint32_t c = counts[i];
      if (c == 0) continue;
      double w = qw_[i];
      double t = has_tie_ ? tvals_[i] : 0.0;
      for (std::uint32_t k = 0; k < c; ++k) {
        int b = copy_pbin[offset[i] + k];
        if (!bin_have[b] || svals_[i] != bin_last_s[b] || t != bin_last_t[b]) {
          ++bin_distinct[b];
          bin_have[b] = 1;
          bin_last_s[b] = svals_[i];
          bin_last_t[b] = t;
        }
        double mid = bin_cum[b] + 0.5 * w;
        int sb = std::min(L - 1, std::max(0, static_cast<int>(mid / bin_qw[b] * L)));
        bin_cum[b] += w;
        CellStats& cell = cells[b * L + sb];
        int g = group_[i];
        ++cell.n[g];
        cell.weight[g] += w_[i];
        cell.wy[g] += w_[i] * y_[i];
        ++cell.count;
        cell.share_weight += sw_[i];
      }
    }
    for (int b = 0; b < K; ++b) {
      if (bin_qw[b] > 0 && bin_distinct[b] < static_cast<std::size_t>(L)) {
        throw PreconditionError(
            "secondary slice count exceeds the distinct values in primary slice " +
            std::to_string(b + 1));
      }
    }
  }

  double total_sw = 0;
  for (const CellStats& cell : cells) total_sw += cell.share_weight;
  std::vector<SliceInput> inputs(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    inputs[c].share = total_sw > 0 ? cells[c].share_weight / total_sw : 0.0;
    SliceOutcome outcome = evaluate_slice(cells[c]);
    if (outcome.strata) inputs[c].strata = std::move(*outcome.strata);
  }
  AggregatedBounds agg = aggregate_slices(inputs);
  return snapshot_bounds(agg.report);
}

}  // namespace stratbound
