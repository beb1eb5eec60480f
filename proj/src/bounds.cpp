#include "stratbound/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace stratbound {

namespace {

BoundInterval clip_to_support(double raw_lo, double raw_hi, double lo_limit,
                              double hi_limit) {
  BoundInterval b;
  b.raw_lo = raw_lo;
  b.raw_hi = raw_hi;
  b.lo = raw_lo;
  b.hi = raw_hi;
  if (b.lo < lo_limit) {
    b.lo = lo_limit;
    b.clipped_lo = true;
  }
  if (b.hi > hi_limit) {
    b.hi = hi_limit;
    b.clipped_hi = true;
  }
  return b;
}

BoundInterval vacuous_interval(double lo, double hi) {
  BoundInterval b;
  b.lo = b.raw_lo = lo;
  b.hi = b.raw_hi = hi;
  b.vacuous = true;
  return b;
}

BoundInterval point_interval(double v) {
  BoundInterval b;
  b.lo = b.raw_lo = v;
  b.hi = b.raw_hi = v;
  return b;
}

}  // namespace

std::pair<BoundInterval, BoundInterval> complier_mean_bounds(double pi_lqc,
                                                             double pi_hqc, double m1,
                                                             double support_lo,
                                                             double support_hi) {
  if (!(pi_lqc >= 0) || !(pi_hqc >= 0)) {
    throw PreconditionError("complier shares must be nonnegative");
  }
  if (pi_lqc + pi_hqc <= 0) {
    throw PreconditionError("no compliers: both complier shares are zero");
  }
  if (!(support_lo < support_hi)) {
    throw PreconditionError("outcome support must be a nondegenerate interval");
  }
  if (!(m1 >= support_lo && m1 <= support_hi)) {
    throw PreconditionError("pooled complier mean lies outside the outcome support");
  }

  auto one_group = [&](double pi_own, double pi_other) -> BoundInterval {
    if (pi_own <= 0) return vacuous_interval(support_lo, support_hi);
    if (pi_other <= 0) return point_interval(m1);
    double a = (pi_own + pi_other) / pi_own;
    double r = pi_other / pi_own;
    // Other group pushed to the top of the support gives this group's floor.
    return clip_to_support(a * m1 - r * support_hi, a * m1 - r * support_lo,
                           support_lo, support_hi);
  };

  return {one_group(pi_lqc, pi_hqc), one_group(pi_hqc, pi_lqc)};
}

namespace {

std::optional<BoundInterval> shift_by_control(const BoundInterval& mean,
                                              std::optional<double> control) {
  if (!control) return std::nullopt;
  BoundInterval b = mean;
  b.lo = mean.lo - *control;
  b.hi = mean.hi - *control;
  b.raw_lo = mean.raw_lo - *control;
  b.raw_hi = mean.raw_hi - *control;
  return b;
}

}  // namespace

std::pair<std::optional<BoundInterval>, std::optional<BoundInterval>> itt_bounds(
    const BoundInterval& mu_lqc1, const BoundInterval& mu_hqc1,
    std::optional<double> mu_lqc_0, std::optional<double> mu_hqc_0) {
  return {shift_by_control(mu_lqc1, mu_lqc_0), shift_by_control(mu_hqc1, mu_hqc_0)};
}

TradeoffSegment tradeoff_segment(double pi_lqc, double pi_hqc, double m1,
                                 double mu_lqc_0, double mu_hqc_0) {
  if (!(pi_lqc > 0 && pi_hqc > 0)) {
    throw PreconditionError("trade-off segment needs both complier shares positive");
  }
  auto [lq, hq] = complier_mean_bounds(pi_lqc, pi_hqc, m1);
  TradeoffSegment seg;
  // The feasible pairs slope downward, so the lq minimum meets the hq
  // maximum and vice versa.
  seg.at_lqc_low = {lq.lo - mu_lqc_0, hq.hi - mu_hqc_0};
  seg.at_lqc_high = {lq.hi - mu_lqc_0, hq.lo - mu_hqc_0};
  return seg;
}

BoundReport make_bound_report(const StrataEstimates& est) {
  BoundReport rep;
  rep.pi_lqc = est.pi[static_cast<int>(Stratum::lqc)];
  rep.pi_hqc = est.pi[static_cast<int>(Stratum::hqc)];
  if (rep.pi_lqc + rep.pi_hqc <= 0) {
    throw PreconditionError("no compliers: both complier shares are zero");
  }
  if (!est.m1) {
    throw PreconditionError("pooled treated complier mean is undefined");
  }
  rep.m1 = *est.m1;
  rep.mu_lqc_0 = est.mu_lqc_0;
  rep.mu_hqc_0 = est.mu_hqc_0;

  auto [lq, hq] = complier_mean_bounds(rep.pi_lqc, rep.pi_hqc, rep.m1);
  rep.mu_lqc1 = lq;
  rep.mu_hqc1 = hq;
  if (lq.vacuous) {
    rep.itt_lqc = vacuous_interval(-1.0, 1.0);
  } else {
    rep.itt_lqc = shift_by_control(lq, est.mu_lqc_0);
  }
  if (hq.vacuous) {
    rep.itt_hqc = vacuous_interval(-1.0, 1.0);
  } else {
    rep.itt_hqc = shift_by_control(hq, est.mu_hqc_0);
  }

  rep.width_ratio_lqc =
      rep.pi_lqc > 0 ? rep.pi_hqc / rep.pi_lqc : std::numeric_limits<double>::infinity();
  rep.width_ratio_hqc =
      rep.pi_hqc > 0 ? rep.pi_lqc / rep.pi_hqc : std::numeric_limits<double>::infinity();

  if (rep.pi_lqc > 0 && rep.pi_hqc > 0 && est.mu_lqc_0 && est.mu_hqc_0) {
    rep.segment =
        tradeoff_segment(rep.pi_lqc, rep.pi_hqc, rep.m1, *est.mu_lqc_0, *est.mu_hqc_0);
  }

  if (est.unstable[static_cast<int>(Stratum::lqc)] ||
      est.unstable[static_cast<int>(Stratum::hqc)]) {
    rep.warnings.push_back(
        "a complier share is below the stability floor; its bounds are unreliable");
  }
  for (const auto& t : est.truncations) {
    if (t.quantity.rfind("pi_", 0) == 0 || t.quantity == "m1") {
      rep.warnings.push_back("input " + t.quantity + " was truncated into range");
    }
  }
  return rep;
}

OracleBounds sharp_bound_oracle(std::span<const Stratum> strata,
                                std::span<const double> y_treated) {
  if (strata.size() != y_treated.size() || strata.empty()) {
    throw PreconditionError("oracle needs matching nonempty label and outcome sequences");
  }
  std::vector<double> complier_y;
  std::size_t n_lqc = 0, n_hqc = 0;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (strata[i] == Stratum::lqc) ++n_lqc;
    if (strata[i] == Stratum::hqc) ++n_hqc;
    if (is_complier(strata[i])) complier_y.push_back(y_treated[i]);
  }
  std::sort(complier_y.begin(), complier_y.end());

  // Mean of the count smallest / largest pooled outcomes.
  auto tail_mean = [&](std::size_t count, bool from_top) {
    double s = 0;
    for (std::size_t k = 0; k < count; ++k) {
      s += from_top ? complier_y[complier_y.size() - 1 - k] : complier_y[k];
    }
    return s / static_cast<double>(count);
  };

  OracleBounds out;
  auto one_group = [&](std::size_t count) -> BoundInterval {
    if (count == 0) return vacuous_interval(0.0, 1.0);
    BoundInterval b;
    b.lo = b.raw_lo = tail_mean(count, false);
    b.hi = b.raw_hi = tail_mean(count, true);
    return b;
  };
  out.lqc = one_group(n_lqc);
  out.hqc = one_group(n_hqc);
  return out;
}

}  // namespace stratbound
