#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "stratbound/types.hpp"

namespace stratbound {

// One input row before semantic validation: raw field text, with empty /
// "na" / "nan" cells already normalized to nullopt by the reader.
struct RawRecord {
  std::size_t row = 0;  // 1-based source line for error messages
  std::string unit_id;
  std::optional<std::string> z;
  std::optional<std::string> school;
  std::optional<std::string> y;
  std::optional<std::string> prob_treat;
  std::optional<std::string> extra_weight;
  std::vector<std::pair<std::string, std::optional<std::string>>> covariates;
};

struct IngestOptions {
  // Accepted category spellings (matched case-insensitively).
  std::map<std::string, School> category_aliases;
  // Used when the prob_treat column is absent or a cell is empty.
  std::optional<double> default_prob_treat;

  IngestOptions();
};

struct CovariateInfo {
  std::string name;
  std::size_t missing = 0;
  bool complete() const { return missing == 0; }
};

// Validated analysis input, stored column-wise. Outcomes are binary; each
// record carries its assignment probability, from which the design weight
// z/p + (1-z)/(1-p) is computed (times the supplied sampling weight, if any).
class Dataset {
 public:
  std::size_t size() const { return z_.size(); }
  const std::string& unit_id(std::size_t i) const { return unit_ids_[i]; }
  int z(std::size_t i) const { return z_[i]; }
  School school(std::size_t i) const { return s_[i]; }
  int y(std::size_t i) const { return y_[i]; }
  double prob_treat(std::size_t i) const { return prob_treat_[i]; }
  double weight(std::size_t i) const { return weight_[i]; }
  int group(std::size_t i) const { return group_index(z_[i], s_[i]); }

  bool has_supplied_weights() const { return has_extra_weight_; }
  double extra_weight(std::size_t i) const {
    return has_extra_weight_ ? extra_weight_[i] : 1.0;
  }

  const std::vector<std::string>& covariate_names() const { return cov_names_; }
  // nullptr when no such column; missing cells are NaN.
  const std::vector<double>* covariate(const std::string& name) const;
  std::vector<CovariateInfo> covariate_schema() const;

  std::array<std::size_t, kNumGroups> group_counts() const;

  friend Dataset validate_dataset(const std::vector<RawRecord>& records,
                                  const IngestOptions& options);
  friend class DatasetBuilder;

 private:
  std::vector<std::string> unit_ids_;
  std::vector<std::uint8_t> z_;
  std::vector<School> s_;
  std::vector<std::uint8_t> y_;
  std::vector<double> prob_treat_;
  std::vector<double> weight_;        // design weight times supplied weight
  std::vector<double> extra_weight_;  // populated only when supplied
  bool has_extra_weight_ = false;
  std::vector<std::string> cov_names_;
  std::vector<std::vector<double>> cov_;
};

// Programmatic construction for simulated and generated data; rows are
// appended pre-validated (throws Error on out-of-domain values).
class DatasetBuilder {
 public:
  explicit DatasetBuilder(std::vector<std::string> covariate_names = {});

  void add_row(int z, School s, int y, double prob_treat,
               const std::vector<double>& covariates = {});
  void set_unit_id(const std::string& id);  // applies to the last added row
  Dataset build();

 private:
  Dataset ds_;
};

// Checks every record and either returns the clean column store or throws
// ValidationError listing all offending rows.
Dataset validate_dataset(const std::vector<RawRecord>& records,
                         const IngestOptions& options = {});

// Indices of each (z, category) cell, ordered 0e,0hq,0lq,1e,1hq,1lq.
std::array<std::vector<std::uint32_t>, kNumGroups> group_partition(const Dataset& ds);

// Header-row CSV with columns unit_id,z,s,y[,prob_treat][,weight],<covariates...>.
// Quoted fields may contain commas and doubled quotes; embedded newlines are
// not supported.
std::vector<RawRecord> read_csv_records(std::istream& in);

Dataset load_csv(const std::string& path, const IngestOptions& options = {});

// Round-trips through read_csv_records + validate_dataset.
void write_csv(const Dataset& ds, std::ostream& out);

}  // namespace stratbound
