#include "stratbound/estimators.hpp"

#include <cmath>

namespace stratbound {

double hajek_mean(std::span<const double> values, std::span<const double> weights) {
  if (values.empty() || values.size() != weights.size()) {
    throw PreconditionError("weighted mean needs nonempty value/weight sequences of equal length");
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += weights[i] * values[i];
    den += weights[i];
  }
  if (!(den > 0)) throw PreconditionError("weights must sum to a positive total");
  return num / den;
}

double horvitz_thompson_mean(std::span<const double> values,
                             std::span<const double> weights,
                             std::size_t n_population) {
  if (values.empty() || values.size() != weights.size()) {
    throw PreconditionError("weighted mean needs nonempty value/weight sequences of equal length");
  }
  if (n_population == 0) throw PreconditionError("population size must be positive");
  double num = 0;
  for (std::size_t i = 0; i < values.size(); ++i) num += weights[i] * values[i];
  return num / static_cast<double>(n_population);
}

namespace {

GroupStats finalize_group_stats(GroupStats gs,
                                const std::array<double, kNumGroups>& wy_sum) {
  for (int z = 0; z < 2; ++z) {
    if (gs.arm_n[z] == 0) {
      throw PreconditionError(std::string(z == 1 ? "treatment" : "control") +
                              " arm is empty");
    }
  }
  for (int g = 0; g < kNumGroups; ++g) {
    int z = g / kNumSchools;
    gs.p_hat[g] = gs.arm_weight[z] > 0 ? gs.weight[g] / gs.arm_weight[z] : 0.0;
    if (gs.n[g] > 0 && gs.weight[g] > 0) gs.y_hat[g] = wy_sum[g] / gs.weight[g];
  }
  return gs;
}

}  // namespace

GroupStats group_stats_from_cells(const std::array<std::size_t, kNumGroups>& n,
                                  const std::array<double, kNumGroups>& weight,
                                  const std::array<double, kNumGroups>& wv) {
  GroupStats gs;
  gs.n = n;
  gs.weight = weight;
  for (int g = 0; g < kNumGroups; ++g) {
    int z = g / kNumSchools;
    gs.arm_n[z] += n[g];
    gs.arm_weight[z] += weight[g];
  }
  return finalize_group_stats(std::move(gs), wv);
}

GroupStats estimate_group_stats(const Dataset& ds) {
  GroupStats gs;
  std::array<double, kNumGroups> wy{};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int g = ds.group(i);
    double w = ds.weight(i);
    ++gs.n[g];
    gs.weight[g] += w;
    wy[g] += w * ds.y(i);
    ++gs.arm_n[ds.z(i)];
    gs.arm_weight[ds.z(i)] += w;
  }
  return finalize_group_stats(std::move(gs), wy);
}

GroupStats estimate_group_values(const Dataset& ds, std::span<const double> values,
                                 std::size_t* excluded) {
  if (values.size() != ds.size()) throw PreconditionError("value column length mismatch");
  GroupStats gs;
  std::array<double, kNumGroups> wv{};
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (std::isnan(values[i])) {
      ++dropped;
      continue;
    }
    int g = ds.group(i);
    double w = ds.weight(i);
    ++gs.n[g];
    gs.weight[g] += w;
    wv[g] += w * values[i];
    ++gs.arm_n[ds.z(i)];
    gs.arm_weight[ds.z(i)] += w;
  }
  if (excluded) *excluded = dropped;
  return finalize_group_stats(std::move(gs), wv);
}

namespace {

constexpr int g0e = group_index(0, School::echs);
constexpr int g0hq = group_index(0, School::hq);
constexpr int g0lq = group_index(0, School::lq);
constexpr int g1e = group_index(1, School::echs);
constexpr int g1hq = group_index(1, School::hq);
constexpr int g1lq = group_index(1, School::lq);

double clip01(double v, const char* quantity, std::vector<TruncationEvent>& log) {
  if (v < 0.0) {
    log.push_back({quantity, v, 0.0});
    return 0.0;
  }
  if (v > 1.0) {
    log.push_back({quantity, v, 1.0});
    return 1.0;
  }
  return v;
}

// Share-weighted cell-mean contribution; an empty cell with zero share
// contributes nothing rather than poisoning the mixture.
std::optional<double> share_term(double share, const std::optional<double>& mean) {
  if (share == 0.0) return 0.0;
  if (!mean) return std::nullopt;
  return share * *mean;
}

// (top0 - top1) / denom with explicit undefinedness.
std::optional<double> mixture_quotient(std::optional<double> top0,
                                       std::optional<double> top1, double denom) {
  if (!(denom > 0) || !top0 || !top1) return std::nullopt;
  return (*top0 - *top1) / denom;
}

}  // namespace

ProportionResult identify_proportions(const GroupStats& gs) {
  ProportionResult pr;
  pr.raw[static_cast<int>(Stratum::eat)] = gs.p_hat[g0e];
  pr.raw[static_cast<int>(Stratum::hqat)] = gs.p_hat[g1hq];
  pr.raw[static_cast<int>(Stratum::hqc)] = gs.p_hat[g0hq] - gs.p_hat[g1hq];
  pr.raw[static_cast<int>(Stratum::lqat)] = gs.p_hat[g1lq];
  pr.raw[static_cast<int>(Stratum::lqc)] = gs.p_hat[g0lq] - gs.p_hat[g1lq];
  static const char* kNames[kNumStrata] = {"pi_eat", "pi_hqat", "pi_hqc", "pi_lqat",
                                           "pi_lqc"};
  for (int r = 0; r < kNumStrata; ++r) {
    pr.pi[r] = clip01(pr.raw[r], kNames[r], pr.truncations);
  }
  return pr;
}

StrataEstimates identify_control_side(const GroupStats& gs, const ProportionResult& pr,
                                      bool strict) {
  StrataEstimates est;
  est.pi = pr.pi;
  est.pi_raw = pr.raw;
  est.truncations = pr.truncations;

  for (int r = 0; r < kNumStrata; ++r) {
    if (pr.raw[r] > 0 && pr.raw[r] < kProportionFloor) {
      est.unstable[r] = true;
      est.warnings.push_back(std::string("pi_") +
                             std::string(stratum_label(kAllStrata[r])) +
                             " is below the stability floor; dependent quantities are unreliable");
    }
  }

  if (gs.y_hat[g0e]) est.mu_eat = clip01(*gs.y_hat[g0e], "mu_eat", est.truncations);
  if (gs.y_hat[g1lq]) est.mu_lqat = clip01(*gs.y_hat[g1lq], "mu_lqat", est.truncations);
  if (gs.y_hat[g1hq]) est.mu_hqat = clip01(*gs.y_hat[g1hq], "mu_hqat", est.truncations);

  const double raw_lqc = pr.raw[static_cast<int>(Stratum::lqc)];
  const double raw_hqc = pr.raw[static_cast<int>(Stratum::hqc)];

  if (auto v = mixture_quotient(share_term(gs.p_hat[g0lq], gs.y_hat[g0lq]),
                                share_term(gs.p_hat[g1lq], gs.y_hat[g1lq]), raw_lqc)) {
    est.mu_lqc_0 = clip01(*v, "mu_lqc_0", est.truncations);
  }
  if (auto v = mixture_quotient(share_term(gs.p_hat[g0hq], gs.y_hat[g0hq]),
                                share_term(gs.p_hat[g1hq], gs.y_hat[g1hq]), raw_hqc)) {
    est.mu_hqc_0 = clip01(*v, "mu_hqc_0", est.truncations);
  }

  const double complier_share = gs.p_hat[g1e] - gs.p_hat[g0e];
  if (complier_share <= 0) {
    if (strict) {
      throw PreconditionError(
          "no compliers identified: program share under treatment does not exceed control");
    }
    est.warnings.push_back(
        "program share under treatment does not exceed control; treated complier mean undefined");
  } else {
    if (complier_share < kProportionFloor) {
      est.compliers_unstable = true;
      est.warnings.push_back(
          "total complier share is below the stability floor; pooled means are unreliable");
    }
    if (auto v = mixture_quotient(share_term(gs.p_hat[g1e], gs.y_hat[g1e]),
                                  share_term(gs.p_hat[g0e], gs.y_hat[g0e]),
                                  complier_share)) {
      est.m1 = clip01(*v, "m1", est.truncations);
    }
  }

  const double pi_lqc = est.pi[static_cast<int>(Stratum::lqc)];
  const double pi_hqc = est.pi[static_cast<int>(Stratum::hqc)];
  std::optional<double> m0_num;
  if (pi_lqc + pi_hqc > 0) {
    auto lq_term = share_term(pi_lqc, est.mu_lqc_0);
    auto hq_term = share_term(pi_hqc, est.mu_hqc_0);
    if (lq_term && hq_term) m0_num = *lq_term + *hq_term;
  }
  if (m0_num) est.m0 = clip01(*m0_num / (pi_lqc + pi_hqc), "m0", est.truncations);

  return est;
}

StrataEstimates estimate_strata(const Dataset& ds, bool strict) {
  GroupStats gs = estimate_group_stats(ds);
  return identify_control_side(gs, identify_proportions(gs), strict);
}

StratumValueMeans stratum_covariate_means(const Dataset& ds, const std::string& covariate) {
  const std::vector<double>* col = ds.covariate(covariate);
  if (!col) throw ConfigError("no such covariate: " + covariate);
  StratumValueMeans out;
  GroupStats gs = estimate_group_values(ds, *col, &out.excluded);
  ProportionResult pr = identify_proportions(gs);

  auto set = [&](Stratum r, std::optional<double> v) {
    out.mean[static_cast<int>(r)] = v;
  };
  set(Stratum::eat, gs.y_hat[g0e]);
  set(Stratum::lqat, gs.y_hat[g1lq]);
  set(Stratum::hqat, gs.y_hat[g1hq]);
  set(Stratum::lqc,
      mixture_quotient(share_term(gs.p_hat[g0lq], gs.y_hat[g0lq]),
                       share_term(gs.p_hat[g1lq], gs.y_hat[g1lq]),
                       pr.raw[static_cast<int>(Stratum::lqc)]));
  set(Stratum::hqc,
      mixture_quotient(share_term(gs.p_hat[g0hq], gs.y_hat[g0hq]),
                       share_term(gs.p_hat[g1hq], gs.y_hat[g1hq]),
                       pr.raw[static_cast<int>(Stratum::hqc)]));
  return out;
}

}  // namespace stratbound
