#include "stratbound/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stratbound {

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format_fixed(double v, int places) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  int len = std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return std::string(buf, buf + len);
}

std::string format_share(double v, RenderMode mode) {
  return mode == RenderMode::pretty ? format_fixed(100.0 * v, 1) : format_number(v);
}

std::string format_value(double v, RenderMode mode) {
  return mode == RenderMode::pretty ? format_fixed(v, 4) : format_number(v);
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string opt_value(const std::optional<double>& v, RenderMode mode) {
  return v ? format_value(*v, mode) : "";
}

std::string flag(bool b) { return b ? "1" : "0"; }

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += csv_cell(table.columns[c]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string to_pretty(const Table& table) {
  std::vector<std::size_t> width(table.columns.size(), 0);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    width[c] = table.columns[c].size();
  }
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }

  std::string out;
  if (!table.title.empty()) {
    out += table.title;
    out += '\n';
    out.append(table.title.size(), '-');
    out += '\n';
  }
  auto emit_row = [&](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t c = 0; c < width.size(); ++c) {
      std::string cell = c < cells.size() ? cells[c] : "";
      if (c) line += "  ";
      line += cell;
      if (c + 1 < width.size()) line.append(width[c] - cell.size(), ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += '\n';
  };
  emit_row(table.columns);
  for (const auto& row : table.rows) emit_row(row);
  for (const auto& note : table.notes) {
    out += "note: ";
    out += note;
    out += '\n';
  }
  return out;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open output file for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("failed writing output file: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error("cannot finalize output file " + path + ": " + ec.message());
}

void write_table_files(const Table& pretty, const Table& csv,
                       const std::string& out_dir, const std::string& stem) {
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  atomic_write((dir / (stem + ".txt")).string(), to_pretty(pretty));
  atomic_write((dir / (stem + ".csv")).string(), to_csv(csv));
}

Table group_table(const GroupStats& gs, RenderMode mode) {
  Table t;
  t.title = "Observed groups";
  t.columns = {"assignment", "category",
               mode == RenderMode::pretty ? "share %" : "share", "n", "outcome_mean"};
  for (int g = 0; g < kNumGroups; ++g) {
    const int z = g / kNumSchools;
    const auto s = static_cast<School>(g % kNumSchools);
    t.rows.push_back({std::to_string(z), std::string(school_label(s)),
                      format_share(gs.p_hat[g], mode), std::to_string(gs.n[g]),
                      opt_value(gs.y_hat[g], mode)});
  }
  return t;
}

Table strata_table(const StrataEstimates& est, RenderMode mode) {
  Table t;
  t.title = "Strata";
  t.columns = {"stratum", mode == RenderMode::pretty ? "share %" : "share",
               "control_mean", "unstable"};
  const std::array<std::optional<double>, kNumStrata> mu = {
      est.mu_eat, est.mu_hqat, est.mu_hqc_0, est.mu_lqat, est.mu_lqc_0};
  for (int r = 0; r < kNumStrata; ++r) {
    t.rows.push_back({std::string(stratum_label(static_cast<Stratum>(r))),
                      format_share(est.pi[r], mode), opt_value(mu[r], mode),
                      flag(est.unstable[r])});
  }
  for (const auto& w : est.warnings) t.notes.push_back(w);
  return t;
}

Table strata_summary_table(const StrataEstimates& est, RenderMode mode) {
  Table t;
  t.title = "Pooled complier quantities";
  t.columns = {"quantity", "value"};
  t.rows.push_back({"treated_mean_m1", opt_value(est.m1, mode)});
  t.rows.push_back({"control_mean_m0", opt_value(est.m0, mode)});
  t.rows.push_back({"effect_cace", opt_value(est.cace(), mode)});
  t.rows.push_back({"truncations", std::to_string(est.truncations.size())});
  for (const auto& e : est.truncations) {
    t.notes.push_back(e.quantity + " adjusted from " + format_number(e.raw) + " to " +
                      format_number(e.adjusted));
  }
  return t;
}

namespace {

void bound_row(Table& t, const std::string& label, double share,
               const std::optional<double>& mu0, const BoundInterval& mu1,
               const std::optional<BoundInterval>& itt, RenderMode mode) {
  std::vector<std::string> row = {label, format_share(share, mode),
                                  opt_value(mu0, mode)};
  row.push_back(format_value(mu1.lo, mode));
  row.push_back(format_value(mu1.hi, mode));
  if (itt) {
    row.push_back(format_value(itt->lo, mode));
    row.push_back(format_value(itt->hi, mode));
  } else {
    row.push_back("");
    row.push_back("");
  }
  row.push_back(format_value(mu1.raw_lo, mode));
  row.push_back(format_value(mu1.raw_hi, mode));
  row.push_back(flag(mu1.vacuous));
  t.rows.push_back(std::move(row));
}

}  // namespace

Table bounds_table(const BoundReport& rep, RenderMode mode) {
  Table t;
  t.title = "Complier bounds";
  t.columns = {"group",      mode == RenderMode::pretty ? "share %" : "share",
               "control_mean", "treated_lo", "treated_hi",
               "effect_lo",  "effect_hi",  "unclipped_lo", "unclipped_hi",
               "vacuous"};
  bound_row(t, "lqc", rep.pi_lqc, rep.mu_lqc_0, rep.mu_lqc1, rep.itt_lqc, mode);
  bound_row(t, "hqc", rep.pi_hqc, rep.mu_hqc_0, rep.mu_hqc1, rep.itt_hqc, mode);
  t.notes.push_back("pooled treated complier mean m1 = " + format_value(rep.m1, mode));
  if (rep.segment) {
    t.notes.push_back(
        "feasible effect extremes: (" + format_value(rep.segment->at_lqc_low.itt_lqc, mode) +
        ", " + format_value(rep.segment->at_lqc_low.itt_hqc, mode) + ") and (" +
        format_value(rep.segment->at_lqc_high.itt_lqc, mode) + ", " +
        format_value(rep.segment->at_lqc_high.itt_hqc, mode) + ")");
  }
  for (const auto& w : rep.warnings) t.notes.push_back(w);
  return t;
}

Table slice_table(const SlicedResult& sliced, RenderMode mode) {
  Table t;
  t.title = "Slices";
  t.columns = {"slice",
               "n",
               mode == RenderMode::pretty ? "share %" : "share",
               "status",
               "pi_lqc",
               "pi_hqc",
               "m1",
               "effect_lqc_lo",
               "effect_lqc_hi",
               "effect_hqc_lo",
               "effect_hqc_hi",
               "weight_lqc",
               "weight_hqc"};
  auto add = [&](const std::string& label, std::size_t n, double share,
                 const std::string& status, const StrataEstimates* est,
                 const BoundReport* rep, double wl, double wh) {
    std::vector<std::string> row = {label, std::to_string(n),
                                    format_share(share, mode), status};
    if (est) {
      row.push_back(format_value(est->pi[static_cast<int>(Stratum::lqc)], mode));
      row.push_back(format_value(est->pi[static_cast<int>(Stratum::hqc)], mode));
      row.push_back(opt_value(est->m1, mode));
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    if (rep && rep->itt_lqc && rep->itt_hqc) {
      row.push_back(format_value(rep->itt_lqc->lo, mode));
      row.push_back(format_value(rep->itt_lqc->hi, mode));
      row.push_back(format_value(rep->itt_hqc->lo, mode));
      row.push_back(format_value(rep->itt_hqc->hi, mode));
    } else {
      row.insert(row.end(), {"", "", "", ""});
    }
    row.push_back(format_value(wl, mode));
    row.push_back(format_value(wh, mode));
    t.rows.push_back(std::move(row));
  };

  for (const auto& s : sliced.slices) {
    const char* status = s.arm_missing        ? "arm-missing"
                         : s.consistency_zeroed ? "zeroed"
                                                : "ok";
    add(s.label, s.n, s.share, status, s.strata ? &*s.strata : nullptr,
        s.bounds ? &*s.bounds : nullptr, s.weight_lqc, s.weight_hqc);
  }
  const AggregatedBounds& agg = sliced.aggregate;
  std::vector<std::string> row = {"aggregate", "", "", ""};
  row.push_back(format_value(agg.pi[static_cast<int>(Stratum::lqc)], mode));
  row.push_back(format_value(agg.pi[static_cast<int>(Stratum::hqc)], mode));
  row.push_back(opt_value(agg.m1, mode));
  if (agg.report.itt_lqc && agg.report.itt_hqc) {
    row.push_back(format_value(agg.report.itt_lqc->lo, mode));
    row.push_back(format_value(agg.report.itt_lqc->hi, mode));
    row.push_back(format_value(agg.report.itt_hqc->lo, mode));
    row.push_back(format_value(agg.report.itt_hqc->hi, mode));
  } else {
    row.insert(row.end(), {"", "", "", ""});
  }
  row.insert(row.end(), {"", ""});
  t.rows.push_back(std::move(row));

  for (const auto& w : sliced.warnings) t.notes.push_back(w);
  return t;
}

Table adjusted_table(const AdjustedBounds& adj, RenderMode mode) {
  Table t;
  t.title = "Bootstrap-adjusted bounds";
  t.columns = {"quantity", "point_lo", "point_hi", "adjusted_lo", "adjusted_hi"};
  auto add = [&](const std::string& q, double plo, double phi,
                 const AdjustedInterval& a) {
    t.rows.push_back({q, format_value(plo, mode), format_value(phi, mode),
                      format_value(a.lo, mode), format_value(a.hi, mode)});
  };
  add("treated_mean_lqc", adj.raw.mu_lqc1_lo, adj.raw.mu_lqc1_hi, adj.mu_lqc1);
  add("treated_mean_hqc", adj.raw.mu_hqc1_lo, adj.raw.mu_hqc1_hi, adj.mu_hqc1);
  add("effect_lqc", adj.raw.itt_lqc_lo, adj.raw.itt_lqc_hi, adj.itt_lqc);
  add("effect_hqc", adj.raw.itt_hqc_lo, adj.raw.itt_hqc_hi, adj.itt_hqc);
  t.notes.push_back("replicates: " + std::to_string(adj.requested) + " requested, " +
                    std::to_string(adj.failures) + " failed");
  t.notes.push_back("vacuous replicates: lqc " + std::to_string(adj.vacuous_lqc) +
                    ", hqc " + std::to_string(adj.vacuous_hqc) + "; clipped " +
                    std::to_string(adj.clipped));
  for (const auto& w : adj.warnings) t.notes.push_back(w);
  return t;
}

Table diagnostics_table(std::span<const DiagnosticResult> results, RenderMode mode) {
  Table t;
  t.title = "Covariate diagnostics";
  t.columns = {"covariate", "kind", "r2", "subgroup_n", "warnings"};
  for (const auto& d : results) {
    t.rows.push_back({d.covariate, std::string(covariate_kind_label(d.kind)),
                      d.r2 ? format_value(*d.r2, mode) : "",
                      std::to_string(d.subgroup_size), join(d.warnings, "; ")});
  }
  return t;
}

Table coverage_table(const CoverageSummary& cov, RenderMode mode) {
  Table t;
  t.title = "Coverage of the true stratum effects";
  t.columns = {"quantity", "value"};
  t.rows.push_back({"trials", std::to_string(cov.trials)});
  t.rows.push_back({"failed_trials", std::to_string(cov.failed_trials)});
  t.rows.push_back({"true_effect_lqc", format_value(cov.true_itt_lqc, mode)});
  t.rows.push_back({"true_effect_hqc", format_value(cov.true_itt_hqc, mode)});
  t.rows.push_back({"raw_coverage_lqc", format_value(cov.raw_rate_lqc(), mode)});
  t.rows.push_back({"raw_coverage_hqc", format_value(cov.raw_rate_hqc(), mode)});
  t.rows.push_back({"adjusted_coverage_lqc", format_value(cov.adj_rate_lqc(), mode)});
  t.rows.push_back({"adjusted_coverage_hqc", format_value(cov.adj_rate_hqc(), mode)});
  t.rows.push_back({"adjusted_coverage_both", format_value(cov.adj_rate_both(), mode)});
  return t;
}

Table noise_grid_table(std::span<const NoiseGridRow> rows) {
  Table t;
  t.title = "Noise grid";
  t.columns = {"sigma2",    "plan",      "trial",   "failed", "width_lqc",
               "width_hqc", "pct_lqc",   "pct_hqc", "r2"};
  for (const auto& r : rows) {
    t.rows.push_back({format_number(r.sigma2), r.plan, std::to_string(r.trial),
                      flag(r.failed), format_number(r.width_lqc),
                      format_number(r.width_hqc), format_number(r.pct_lqc),
                      format_number(r.pct_hqc), format_number(r.r2)});
  }
  return t;
}

Table sample_size_table(std::span<const SampleSizeRow> rows) {
  Table t;
  t.title = "Sample-size sweep";
  t.columns = {"n", "plan", "trial", "failed", "width_lqc", "width_hqc"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.n), r.plan, std::to_string(r.trial),
                      flag(r.failed), format_number(r.width_lqc),
                      format_number(r.width_hqc)});
  }
  return t;
}

Table slice_count_table(const SliceCountResult& result) {
  Table t;
  t.title = "Slice-count sweep";
  t.columns = {"k",           "trial",         "failed",        "width_lqc",
               "width_hqc",   "adj_width_lqc", "adj_width_hqc", "covered_lqc",
               "covered_hqc"};
  for (const auto& r : result.rows) {
    t.rows.push_back({std::to_string(r.k), std::to_string(r.trial), flag(r.failed),
                      format_number(r.width_lqc), format_number(r.width_hqc),
                      format_number(r.adj_width_lqc), format_number(r.adj_width_hqc),
                      flag(r.covered_lqc), flag(r.covered_hqc)});
  }
  return t;
}

Table slice_count_reference_table(const SliceCountResult& result,
                                  std::span<const int> k_list) {
  Table t;
  t.title = "Slice-count reference widths";
  t.columns = {"k", "reference_width_lqc", "reference_width_hqc", "true_effect_lqc",
               "true_effect_hqc"};
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    t.rows.push_back({std::to_string(k_list[i]),
                      format_number(result.oracle_width_lqc[i]),
                      format_number(result.oracle_width_hqc[i]),
                      format_number(result.true_itt_lqc),
                      format_number(result.true_itt_hqc)});
  }
  return t;
}

Table replicate_table(std::span<const ReplicateRecord> dump) {
  Table t;
  t.title = "Bootstrap replicates";
  t.columns = {"index",      "failed",     "failure",     "pi_lqc",     "pi_hqc",
               "m1",         "treated_lqc_lo", "treated_lqc_hi", "treated_hqc_lo",
               "treated_hqc_hi", "effect_lqc_lo", "effect_lqc_hi", "effect_hqc_lo",
               "effect_hqc_hi", "lqc_vacuous", "hqc_vacuous", "any_clipped"};
  for (const auto& r : dump) {
    if (r.failed) {
      t.rows.push_back({std::to_string(r.index), "1", r.failure, "", "", "", "", "",
                        "", "", "", "", "", "", "", "", ""});
      continue;
    }
    const BoundSnapshot& s = r.snapshot;
    t.rows.push_back({std::to_string(r.index), "0", "", format_number(s.pi_lqc),
                      format_number(s.pi_hqc), format_number(s.m1),
                      format_number(s.mu_lqc1_lo), format_number(s.mu_lqc1_hi),
                      format_number(s.mu_hqc1_lo), format_number(s.mu_hqc1_hi),
                      format_number(s.itt_lqc_lo), format_number(s.itt_lqc_hi),
                      format_number(s.itt_hqc_lo), format_number(s.itt_hqc_hi),
                      flag(s.lqc_vacuous), flag(s.hqc_vacuous), flag(s.any_clipped)});
  }
  return t;
}

}  // namespace stratbound
