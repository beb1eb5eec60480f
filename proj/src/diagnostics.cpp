#include "stratbound/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace stratbound {

std::string_view covariate_kind_label(CovariateKind kind) {
  switch (kind) {
    case CovariateKind::principal: return "principal";
    case CovariateKind::compliance: return "compliance";
    case CovariateKind::prognostic: return "prognostic";
  }
  return "?";
}

namespace {

double softplus(double x) { return x > 35 ? x : std::log1p(std::exp(x)); }

double log_likelihood(std::span<const double> y, std::span<const double> w,
                      const std::vector<double>& eta) {
  double ll = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // log p = -softplus(-eta), log(1-p) = -softplus(eta)
    ll += w[i] * (y[i] * -softplus(-eta[i]) + (1 - y[i]) * -softplus(eta[i]));
  }
  return ll;
}

// Gaussian elimination with partial pivoting; a is row-major p x p.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t p = b.size();
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(a[r * p + col]) > std::fabs(a[pivot * p + col])) pivot = r;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < p; ++c) std::swap(a[col * p + c], a[pivot * p + c]);
      std::swap(b[col], b[pivot]);
    }
    double d = a[col * p + col];
    if (d == 0) throw Error("singular system in logistic solver");
    for (std::size_t r = col + 1; r < p; ++r) {
      double f = a[r * p + col] / d;
      if (f == 0) continue;
      for (std::size_t c = col; c < p; ++c) a[r * p + c] -= f * a[col * p + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(p);
  for (std::size_t ri = p; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < p; ++c) s -= a[ri * p + c] * x[c];
    x[ri] = s / a[ri * p + ri];
  }
  return x;
}

double weighted_rate(std::span<const double> y, std::span<const double> w) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += w[i] * y[i];
    den += w[i];
  }
  return den > 0 ? num / den : 0.0;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> y,
                         const std::vector<std::vector<double>>& x_columns,
                         std::span<const double> weights) {
  const std::size_t n = y.size();
  if (n == 0) throw PreconditionError("logistic fit needs at least one observation");
  if (weights.size() != n) throw PreconditionError("weight length mismatch");
  for (const auto& col : x_columns) {
    if (col.size() != n) throw PreconditionError("design column length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0)) throw PreconditionError("weights must be positive");
    if (y[i] != 0.0 && y[i] != 1.0) throw PreconditionError("outcome must be 0/1");
  }

  LogisticFit fit;
  const std::size_t p = x_columns.size() + 1;
  fit.coef.assign(p, 0.0);

  double rate = weighted_rate(y, weights);
  if (rate == 0.0 || rate == 1.0) {
    fit.degenerate = true;
    fit.converged = true;
    fit.log_likelihood = 0;
    fit.null_log_likelihood = 0;
    fit.warnings.push_back("outcome is constant in this subgroup");
    return fit;
  }
  double wsum = 0;
  for (std::size_t i = 0; i < n; ++i) wsum += weights[i];
  fit.null_log_likelihood =
      wsum * (rate * std::log(rate) + (1 - rate) * std::log(1 - rate));

  auto x_at = [&](std::size_t i, std::size_t j) -> double {
    return j == 0 ? 1.0 : x_columns[j - 1][i];
  };
  auto eta_of = [&](const std::vector<double>& beta) {
    std::vector<double> eta(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double e = beta[0];
      for (std::size_t j = 1; j < p; ++j) e += beta[j] * x_columns[j - 1][i];
      eta[i] = e;
    }
    return eta;
  };

  constexpr double kRidge = 1e-10;
  constexpr double kTol = 1e-8;
  constexpr int kMaxIter = 100;

  std::vector<double> eta = eta_of(fit.coef);
  double ll = log_likelihood(y, weights, eta);

  for (fit.iterations = 1; fit.iterations <= kMaxIter; ++fit.iterations) {
    std::vector<double> a(p * p, 0.0), b(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double mu = 1.0 / (1.0 + std::exp(-eta[i]));
      double v = std::max(mu * (1 - mu), 1e-10);
      double wi = weights[i] * v;
      double z = eta[i] + (y[i] - mu) / v;
      for (std::size_t j = 0; j < p; ++j) {
        double xj = x_at(i, j);
        b[j] += wi * z * xj;
        for (std::size_t l = j; l < p; ++l) a[j * p + l] += wi * xj * x_at(i, l);
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      a[j * p + j] += kRidge;
      for (std::size_t l = 0; l < j; ++l) a[j * p + l] = a[l * p + j];
    }

    std::vector<double> next = solve_dense(std::move(a), std::move(b));

    // Step-halving toward the previous point if the likelihood drops.
    std::vector<double> cand = next;
    std::vector<double> cand_eta = eta_of(cand);
    double cand_ll = log_likelihood(y, weights, cand_eta);
    for (int h = 0; h < 30 && cand_ll < ll - 1e-12; ++h) {
      for (std::size_t j = 0; j < p; ++j) cand[j] = 0.5 * (cand[j] + fit.coef[j]);
      cand_eta = eta_of(cand);
      cand_ll = log_likelihood(y, weights, cand_eta);
    }

    double delta = 0;
    for (std::size_t j = 0; j < p; ++j) {
      delta = std::max(delta, std::fabs(cand[j] - fit.coef[j]));
    }
    fit.coef = std::move(cand);
    eta = std::move(cand_eta);
    ll = cand_ll;
    if (delta < kTol) {
      fit.converged = true;
      break;
    }
  }

  fit.log_likelihood = ll;
  if (ll > -1e-6) {
    fit.separated = true;
    fit.warnings.push_back(
        "perfect separation: fitted probabilities reached the data exactly");
  }
  if (!fit.converged) {
    fit.warnings.push_back("logistic fit did not converge within 100 iterations");
  }
  return fit;
}

double mcfadden_r2(const LogisticFit& fit) {
  if (fit.degenerate) return 0.0;
  if (fit.separated) return 1.0;
  if (!(fit.null_log_likelihood < -1e-12)) {
    throw PreconditionError("null log-likelihood is zero; ratio undefined");
  }
  double r2 = 1.0 - fit.log_likelihood / fit.null_log_likelihood;
  return std::clamp(r2, 0.0, 1.0);
}

DiagnosticResult covariate_r2(const Dataset& ds, const std::string& covariate,
                              CovariateKind kind) {
  const std::vector<double>* col = ds.covariate(covariate);
  if (!col) throw ConfigError("no such covariate: " + covariate);

  DiagnosticResult out;
  out.covariate = covariate;
  out.kind = kind;

  std::vector<double> y, w, x, d_hq, d_lq;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    bool in_subgroup = false;
    double target = 0;
    switch (kind) {
      case CovariateKind::principal:
        in_subgroup = ds.z(i) == 0 && ds.school(i) != School::echs;
        target = ds.school(i) == School::lq ? 1.0 : 0.0;
        break;
      case CovariateKind::compliance:
        in_subgroup = ds.z(i) == 1;
        target = ds.school(i) == School::echs ? 1.0 : 0.0;
        break;
      case CovariateKind::prognostic:
        in_subgroup = ds.z(i) == 0;
        target = ds.y(i);
        break;
    }
    if (!in_subgroup) continue;
    if (std::isnan((*col)[i])) {
      ++missing;
      continue;
    }
    y.push_back(target);
    w.push_back(ds.weight(i));
    x.push_back((*col)[i]);
    if (kind == CovariateKind::prognostic) {
      d_hq.push_back(ds.school(i) == School::hq ? 1.0 : 0.0);
      d_lq.push_back(ds.school(i) == School::lq ? 1.0 : 0.0);
    }
  }
  if (missing > 0) {
    out.warnings.push_back(std::to_string(missing) +
                           " record(s) excluded for missing covariate values");
  }
  out.subgroup_size = y.size();
  if (y.empty()) {
    out.warnings.push_back("undefined: subgroup is empty");
    return out;
  }
  double rate = weighted_rate(y, w);
  if (rate == 0.0 || rate == 1.0) {
    out.warnings.push_back("undefined: outcome is constant in this subgroup");
    return out;
  }

  if (kind == CovariateKind::compliance) {
    // This read assumes program attendance under no offer is rare.
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.z(i) != 0) continue;
      den += ds.weight(i);
      if (ds.school(i) == School::echs) num += ds.weight(i);
    }
    if (den > 0 && num / den > 0.10) {
      out.warnings.push_back(
          "control-arm program share exceeds 10%; compliance screen is unreliable");
    }
  }

  LogisticFit fit;
  if (kind == CovariateKind::prognostic) {
    fit = fit_logistic(y, {x, d_hq, d_lq}, w);
    LogisticFit null_fit = fit_logistic(y, {d_hq, d_lq}, w);
    fit.null_log_likelihood = null_fit.log_likelihood;
    for (const auto& msg : null_fit.warnings) out.warnings.push_back("null model: " + msg);
    if (null_fit.separated) {
      out.warnings.push_back("undefined: category dummies alone separate the outcome");
      return out;
    }
    if (!(fit.null_log_likelihood < -1e-12)) {
      out.warnings.push_back("undefined: null model log-likelihood is zero");
      return out;
    }
  } else {
    fit = fit_logistic(y, {x}, w);
  }
  for (const auto& msg : fit.warnings) out.warnings.push_back(msg);
  out.r2 = mcfadden_r2(fit);
  return out;
}

}  // namespace stratbound
