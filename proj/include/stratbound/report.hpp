#pragma once

#include <span>
#include <string>
#include <vector>

#include "stratbound/analysis.hpp"
#include "stratbound/bootstrap.hpp"
#include "stratbound/diagnostics.hpp"
#include "stratbound/simulation.hpp"

namespace stratbound {

// pretty rounds for reading (shares as one-decimal percents, means to four
// places); csv keeps full precision proportions for downstream tooling.
enum class RenderMode { pretty, csv };

// Shortest round-trip decimal form; NaN renders as an empty cell.
std::string format_number(double v);
std::string format_fixed(double v, int places);
std::string format_share(double v, RenderMode mode);  // pretty → percent, 1dp
std::string format_value(double v, RenderMode mode);  // pretty → 4 places

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;  // pretty output only
};

std::string to_csv(const Table& table);
std::string to_pretty(const Table& table);

// Writes content to a temp file in the target directory, then renames it
// over the destination, so readers never observe partial output.
void atomic_write(const std::string& path, const std::string& content);

// Writes <out_dir>/<stem>.txt (pretty) and <out_dir>/<stem>.csv.
void write_table_files(const Table& pretty, const Table& csv,
                       const std::string& out_dir, const std::string& stem);

// Observed-cell summary: one row per (assignment, category) group.
Table group_table(const GroupStats& gs, RenderMode mode);

// One row per stratum: share and identified control-side mean.
Table strata_table(const StrataEstimates& est, RenderMode mode);

// Pooled complier quantities and truncation tally.
Table strata_summary_table(const StrataEstimates& est, RenderMode mode);

// One row per complier group: share, control mean, treated-mean interval,
// effect interval, and the pre-clip endpoints.
Table bounds_table(const BoundReport& rep, RenderMode mode);

// One row per slice plus the aggregate row.
Table slice_table(const SlicedResult& sliced, RenderMode mode);

// Point intervals next to their bootstrap-adjusted envelopes.
Table adjusted_table(const AdjustedBounds& adj, RenderMode mode);

Table diagnostics_table(std::span<const DiagnosticResult> results, RenderMode mode);

Table coverage_table(const CoverageSummary& cov, RenderMode mode);

// Tidy sweep outputs: one row per trial x configuration, full precision in
// both modes (these are data files, not presentation tables).
Table noise_grid_table(std::span<const NoiseGridRow> rows);
Table sample_size_table(std::span<const SampleSizeRow> rows);
Table slice_count_table(const SliceCountResult& result);
Table slice_count_reference_table(const SliceCountResult& result,
                                  std::span<const int> k_list);

// One row per bootstrap replicate (endpoint dump).
Table replicate_table(std::span<const ReplicateRecord> dump);

}  // namespace stratbound
