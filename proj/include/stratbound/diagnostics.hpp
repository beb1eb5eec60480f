#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stratbound/dataset.hpp"

namespace stratbound {

struct LogisticFit {
  std::vector<double> coef;  // intercept first, then one slope per column
  double log_likelihood = 0;
  double null_log_likelihood = 0;  // intercept-only unless overridden later
  bool converged = false;
  int iterations = 0;
  bool separated = false;   // likelihood pushed to (numerically) zero
  bool degenerate = false;  // constant outcome
  std::vector<std::string> warnings;
};

// Weighted logistic maximum likelihood via iteratively reweighted least
// squares: convergence when the largest coefficient change drops below 1e-8,
// at most 100 iterations, step-halving when a step lowers the likelihood,
// and a tiny ridge on the normal equations for singular designs.
LogisticFit fit_logistic(std::span<const double> y,
                         const std::vector<std::vector<double>>& x_columns,
                         std::span<const double> weights);

// 1 - logL/logL0, clipped at 0; exactly 1 when separated, 0 when degenerate.
double mcfadden_r2(const LogisticFit& fit);

enum class CovariateKind { principal, compliance, prognostic };

std::string_view covariate_kind_label(CovariateKind kind);

struct DiagnosticResult {
  std::string covariate;
  CovariateKind kind = CovariateKind::principal;
  std::optional<double> r2;  // nullopt when undefined (empty subgroup etc.)
  std::size_t subgroup_size = 0;
  std::vector<std::string> warnings;
};

// Kind-specific usefulness screens, all weighted:
//  principal  — among control-arm records outside the program, regress
//               low-quality attendance on the covariate;
//  compliance — among offered records, regress program attendance on the
//               covariate (warned when the control-arm program share
//               exceeds 10%, where this read becomes unreliable);
//  prognostic — among control-arm records, regress the outcome on the
//               covariate plus category dummies; the null model is the
//               dummies-only fit.
DiagnosticResult covariate_r2(const Dataset& ds, const std::string& covariate,
                              CovariateKind kind);

}  // namespace stratbound
