#include "stratbound/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stratbound/rng.hpp"

namespace stratbound {

namespace {

std::size_t percentile_index(std::size_t n, double q) {
  double raw = std::ceil(q * static_cast<double>(n)) - 1.0;
  if (raw < 0) return 0;
  std::size_t idx = static_cast<std::size_t>(raw);
  return std::min(idx, n - 1);
}

}  // namespace

double percentile_lower(std::span<const double> sorted, double alpha) {
  if (sorted.empty()) throw PreconditionError("percentile of an empty sample");
  return sorted[percentile_index(sorted.size(), alpha)];
}

double percentile_upper(std::span<const double> sorted, double alpha) {
  if (sorted.empty()) throw PreconditionError("percentile of an empty sample");
  return sorted[percentile_index(sorted.size(), 1.0 - alpha)];
}

AdjustedBounds bootstrap_bounds(const Dataset& ds, const AnalysisPlan& plan,
                                const BootstrapConfig& cfg,
                                std::vector<ReplicateRecord>* dump) {
  if (cfg.replicates < 1) throw ConfigError("bootstrap needs at least one replicate");
  if (!(cfg.alpha > 0 && cfg.alpha < 0.5)) {
    throw ConfigError("percentile alpha must lie strictly between 0 and 0.5");
  }

  AdjustedBounds out;
  out.requested = cfg.replicates;

  AnalysisResult point = analyze(ds, plan);
  out.raw = snapshot_bounds(plan.slice ? point.sliced->aggregate.report : point.bounds);

  ResampleAnalyzer analyzer(ds, plan);
  const std::size_t n = analyzer.size();
  const std::size_t b = cfg.replicates;

  std::vector<ReplicateRecord> reps(b);

#ifdef _OPENMP
  int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
#endif
  for (long long r = 0; r < static_cast<long long>(b); ++r) {
    SplitRng rng(derive_key(cfg.seed, Stream::resample, static_cast<std::uint64_t>(r)));
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      ++counts[rng.next_below(static_cast<std::uint32_t>(n))];
    }
    ReplicateRecord& rec = reps[static_cast<std::size_t>(r)];
    rec.index = static_cast<std::uint32_t>(r);
    try {
      rec.snapshot = analyzer.run(counts);
    } catch (const Error& e) {
      rec.failed = true;
      rec.failure = e.what();
    }
  }

  std::vector<double> lqc_lo, lqc_hi, hqc_lo, hqc_hi;
  std::vector<double> mlqc_lo, mlqc_hi, mhqc_lo, mhqc_hi;
  std::string first_failure;
  for (const ReplicateRecord& rec : reps) {
    if (rec.failed) {
      ++out.failures;
      if (first_failure.empty()) first_failure = rec.failure;
      continue;
    }
    lqc_lo.push_back(rec.snapshot.itt_lqc_lo);
    lqc_hi.push_back(rec.snapshot.itt_lqc_hi);
    hqc_lo.push_back(rec.snapshot.itt_hqc_lo);
    hqc_hi.push_back(rec.snapshot.itt_hqc_hi);
    mlqc_lo.push_back(rec.snapshot.mu_lqc1_lo);
    mlqc_hi.push_back(rec.snapshot.mu_lqc1_hi);
    mhqc_lo.push_back(rec.snapshot.mu_hqc1_lo);
    mhqc_hi.push_back(rec.snapshot.mu_hqc1_hi);
    if (rec.snapshot.lqc_vacuous) ++out.vacuous_lqc;
    if (rec.snapshot.hqc_vacuous) ++out.vacuous_hqc;
    if (rec.snapshot.any_clipped) ++out.clipped;
  }

  if (out.failures * 2 > b) {
    throw Error("bootstrap unusable: " + std::to_string(out.failures) + " of " +
                std::to_string(b) + " replicates failed (first: " + first_failure + ")");
  }
  if (out.failures > 0) {
    out.warnings.push_back(std::to_string(out.failures) + " of " + std::to_string(b) +
                           " replicates failed and were excluded (first: " +
                           first_failure + ")");
  }
  if (out.vacuous_lqc + out.vacuous_hqc > 0) {
    out.warnings.push_back(
        std::to_string(std::max(out.vacuous_lqc, out.vacuous_hqc)) +
        " replicate(s) produced vacuous intervals; the adjusted endpoints include them");
  }
  if (out.clipped * 10 > b) {
    out.warnings.push_back(
        "bounds were clipped in over 10% of replicates; percentile adjustment may "
        "be unreliable near the support limits");
  }

  auto adjust = [&](std::vector<double>& lo, std::vector<double>& hi) {
    std::sort(lo.begin(), lo.end());
    std::sort(hi.begin(), hi.end());
    return AdjustedInterval{percentile_lower(lo, cfg.alpha),
                            percentile_upper(hi, cfg.alpha)};
  };
  out.itt_lqc = adjust(lqc_lo, lqc_hi);
  out.itt_hqc = adjust(hqc_lo, hqc_hi);
  out.mu_lqc1 = adjust(mlqc_lo, mlqc_hi);
  out.mu_hqc1 = adjust(mhqc_lo, mhqc_hi);

  if (dump) *dump = std::move(reps);
  return out;
}

}  // namespace stratbound
