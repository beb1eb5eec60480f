#include "stratbound/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace stratbound {

std::string_view school_label(School s) {
  switch (s) {
    case School::echs: return "e";
    case School::hq: return "hq";
    case School::lq: return "lq";
  }
  return "?";
}

std::string_view stratum_label(Stratum r) {
  switch (r) {
    case Stratum::eat: return "eat";
    case Stratum::hqat: return "hqat";
    case Stratum::hqc: return "hqc";
    case Stratum::lqat: return "lqat";
    case Stratum::lqc: return "lqc";
  }
  return "?";
}

std::string group_label(int g) {
  return std::to_string(g / kNumSchools) +
         std::string(school_label(static_cast<School>(g % kNumSchools)));
}

namespace {

std::string issues_message(const std::vector<ValidationIssue>& issues) {
  std::string msg = "dataset validation failed (" + std::to_string(issues.size()) +
                    " issue" + (issues.size() == 1 ? "" : "s") + ")";
  std::size_t shown = 0;
  for (const auto& is : issues) {
    if (shown++ == 5) {
      msg += "; ...";
      break;
    }
    msg += "; row " + std::to_string(is.row) + " " + is.field + ": " + is.message;
  }
  return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<ValidationIssue> iss)
    : Error(issues_message(iss)), issues(std::move(iss)) {}

IngestOptions::IngestOptions() {
  category_aliases = {{"e", School::echs}, {"hq", School::hq}, {"lq", School::lq}};
}

const std::vector<double>* Dataset::covariate(const std::string& name) const {
  for (std::size_t j = 0; j < cov_names_.size(); ++j) {
    if (cov_names_[j] == name) return &cov_[j];
  }
  return nullptr;
}

std::vector<CovariateInfo> Dataset::covariate_schema() const {
  std::vector<CovariateInfo> out;
  for (std::size_t j = 0; j < cov_names_.size(); ++j) {
    CovariateInfo info;
    info.name = cov_names_[j];
    for (double v : cov_[j]) {
      if (std::isnan(v)) ++info.missing;
    }
    out.push_back(std::move(info));
  }
  return out;
}

std::array<std::size_t, kNumGroups> Dataset::group_counts() const {
  std::array<std::size_t, kNumGroups> n{};
  for (std::size_t i = 0; i < size(); ++i) ++n[group(i)];
  return n;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

Dataset validate_dataset(const std::vector<RawRecord>& records,
                         const IngestOptions& options) {
  std::vector<ValidationIssue> issues;
  if (records.empty()) {
    issues.push_back({0, "input", "no records"});
    throw ValidationError(std::move(issues));
  }

  std::map<std::string, School> aliases;
  for (const auto& [label, cat] : options.category_aliases) aliases[lower(label)] = cat;

  // Covariate columns: union of names, in first-seen order.
  std::vector<std::string> cov_names;
  for (const auto& rec : records) {
    for (const auto& [name, value] : rec.covariates) {
      (void)value;
      if (std::find(cov_names.begin(), cov_names.end(), name) == cov_names.end()) {
        cov_names.push_back(name);
      }
    }
  }

  Dataset ds;
  ds.cov_names_ = cov_names;
  ds.cov_.assign(cov_names.size(), {});
  const std::size_t n = records.size();
  ds.unit_ids_.reserve(n);
  ds.z_.reserve(n);
  ds.s_.reserve(n);
  ds.y_.reserve(n);
  ds.prob_treat_.reserve(n);
  ds.weight_.reserve(n);
  bool any_extra_weight = false;
  for (const auto& rec : records) {
    if (rec.extra_weight) any_extra_weight = true;
  }
  ds.has_extra_weight_ = any_extra_weight;

  for (const auto& rec : records) {
    bool row_ok = true;
    auto fail = [&](const char* field, std::string message) {
      issues.push_back({rec.row, field, std::move(message)});
      row_ok = false;
    };

    int z = -1;
    if (!rec.z) {
      fail("z", "missing assignment indicator");
    } else if (*rec.z != "0" && *rec.z != "1") {
      fail("z", "expected 0 or 1, got '" + *rec.z + "'");
    } else {
      z = (*rec.z == "1") ? 1 : 0;
    }

    School s = School::echs;
    if (!rec.school) {
      fail("s", "missing category");
    } else {
      auto it = aliases.find(lower(*rec.school));
      if (it == aliases.end()) {
        fail("s", "unknown category '" + *rec.school + "'");
      } else {
        s = it->second;
      }
    }

    double y = 0;
    if (!rec.y) {
      fail("y", "missing outcome");
    } else if (!parse_double(*rec.y, y) || (y != 0.0 && y != 1.0)) {
      fail("y", "binary outcome expected, got '" + *rec.y + "'");
    }

    double p = 0;
    if (rec.prob_treat) {
      if (!parse_double(*rec.prob_treat, p)) {
        fail("prob_treat", "not a number: '" + *rec.prob_treat + "'");
      } else if (!(p > 0.0 && p < 1.0)) {
        fail("prob_treat", "treatment probability must lie strictly in (0,1)");
      }
    } else if (options.default_prob_treat) {
      p = *options.default_prob_treat;
      if (!(p > 0.0 && p < 1.0)) {
        fail("prob_treat", "configured constant must lie strictly in (0,1)");
      }
    } else {
      fail("prob_treat", "missing and no dataset-level constant configured");
    }

    double extra = 1.0;
    if (any_extra_weight) {
      if (!rec.extra_weight || rec.extra_weight->empty()) {
        fail("weight", "weight column present but value missing");
      } else if (!parse_double(*rec.extra_weight, extra) ||
                 !(extra > 0.0 && std::isfinite(extra))) {
        fail("weight", "weights must be positive and finite");
      }
    }

    std::vector<double> cov_row(cov_names.size(),
                                std::numeric_limits<double>::quiet_NaN());
    for (const auto& [name, value] : rec.covariates) {
      if (!value) continue;  // missing stays NaN
      double v = 0;
      if (!parse_double(*value, v) || !std::isfinite(v)) {
        fail(name.c_str(), "not a finite number: '" + *value + "'");
        continue;
      }
      auto it = std::find(cov_names.begin(), cov_names.end(), name);
      cov_row[static_cast<std::size_t>(it - cov_names.begin())] = v;
    }

    if (!row_ok) continue;

    ds.unit_ids_.push_back(rec.unit_id);
    ds.z_.push_back(static_cast<std::uint8_t>(z));
    ds.s_.push_back(s);
    ds.y_.push_back(static_cast<std::uint8_t>(y));
    ds.prob_treat_.push_back(p);
    double base = (z == 1) ? 1.0 / p : 1.0 / (1.0 - p);
    ds.weight_.push_back(base * extra);
    if (any_extra_weight) ds.extra_weight_.push_back(extra);
    for (std::size_t j = 0; j < cov_names.size(); ++j) ds.cov_[j].push_back(cov_row[j]);
  }

  if (!issues.empty()) throw ValidationError(std::move(issues));
  return ds;
}

DatasetBuilder::DatasetBuilder(std::vector<std::string> covariate_names) {
  ds_.cov_names_ = std::move(covariate_names);
  ds_.cov_.assign(ds_.cov_names_.size(), {});
}

void DatasetBuilder::add_row(int z, School s, int y, double prob_treat,
                             const std::vector<double>& covariates) {
  if (z != 0 && z != 1) throw Error("assignment indicator must be 0 or 1");
  if (y != 0 && y != 1) throw Error("outcome must be 0 or 1");
  if (!(prob_treat > 0.0 && prob_treat < 1.0)) {
    throw Error("treatment probability must lie strictly in (0,1)");
  }
  if (covariates.size() != ds_.cov_names_.size()) {
    throw Error("covariate count mismatch");
  }
  ds_.unit_ids_.push_back(std::to_string(ds_.size() + 1));
  ds_.z_.push_back(static_cast<std::uint8_t>(z));
  ds_.s_.push_back(s);
  ds_.y_.push_back(static_cast<std::uint8_t>(y));
  ds_.prob_treat_.push_back(prob_treat);
  ds_.weight_.push_back(z == 1 ? 1.0 / prob_treat : 1.0 / (1.0 - prob_treat));
  for (std::size_t j = 0; j < covariates.size(); ++j) ds_.cov_[j].push_back(covariates[j]);
}

void DatasetBuilder::set_unit_id(const std::string& id) {
  if (ds_.unit_ids_.empty()) throw Error("no row to label");
  ds_.unit_ids_.back() = id;
}

Dataset DatasetBuilder::build() { return std::move(ds_); }

std::array<std::vector<std::uint32_t>, kNumGroups> group_partition(const Dataset& ds) {
  std::array<std::vector<std::uint32_t>, kNumGroups> parts;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    parts[ds.group(i)].push_back(static_cast<std::uint32_t>(i));
  }
  return parts;
}

namespace {

// One CSV line, comma-separated, double quotes escape embedded commas and
// doubled quotes. Embedded newlines are not supported.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool is_missing_token(const std::string& s) {
  std::string t = lower(trim(s));
  return t.empty() || t == "na" || t == "nan";
}

}  // namespace

std::vector<RawRecord> read_csv_records(std::istream& in) {
  std::vector<ValidationIssue> issues;
  std::string line;
  if (!std::getline(in, line)) {
    issues.push_back({0, "input", "no records"});
    throw ValidationError(std::move(issues));
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
    line.erase(0, 3);  // UTF-8 byte-order mark
  }

  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  struct ColumnRole {
    enum Kind { unit_id, z, s, y, prob_treat, weight, covariate } kind;
    std::string name;
  };
  std::vector<ColumnRole> roles;
  std::vector<std::string> seen;
  for (const auto& h : header) {
    if (std::find(seen.begin(), seen.end(), h) != seen.end()) {
      issues.push_back({0, "header", "duplicate column '" + h + "'"});
    }
    seen.push_back(h);
    if (h == "unit_id") roles.push_back({ColumnRole::unit_id, h});
    else if (h == "z") roles.push_back({ColumnRole::z, h});
    else if (h == "s") roles.push_back({ColumnRole::s, h});
    else if (h == "y") roles.push_back({ColumnRole::y, h});
    else if (h == "prob_treat") roles.push_back({ColumnRole::prob_treat, h});
    else if (h == "weight") roles.push_back({ColumnRole::weight, h});
    else if (h.empty()) issues.push_back({0, "header", "empty column name"});
    else roles.push_back({ColumnRole::covariate, h});
  }
  for (const char* required : {"unit_id", "z", "s", "y"}) {
    if (std::find(seen.begin(), seen.end(), required) == seen.end()) {
      issues.push_back({0, "header", std::string("missing required column '") + required + "'"});
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));

  std::vector<RawRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      issues.push_back({row, "row",
                        "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size())});
      continue;
    }
    RawRecord rec;
    rec.row = row;
    for (std::size_t j = 0; j < roles.size(); ++j) {
      std::string value = trim(fields[j]);
      bool missing = is_missing_token(value);
      switch (roles[j].kind) {
        case ColumnRole::unit_id:
          rec.unit_id = value;
          break;
        case ColumnRole::z:
          if (!missing) rec.z = value;
          break;
        case ColumnRole::s:
          if (!missing) rec.school = value;
          break;
        case ColumnRole::y:
          if (!missing) rec.y = value;
          break;
        case ColumnRole::prob_treat:
          if (!missing) rec.prob_treat = value;
          break;
        case ColumnRole::weight:
          // Kept even when blank: a weight column makes the value mandatory.
          rec.extra_weight = value;
          break;
        case ColumnRole::covariate:
          rec.covariates.emplace_back(roles[j].name,
                                      missing ? std::nullopt
                                              : std::optional<std::string>(value));
          break;
      }
    }
    records.push_back(std::move(rec));
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return records;
}

Dataset load_csv(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input file: " + path);
  std::vector<RawRecord> records = read_csv_records(in);
  return validate_dataset(records, options);
}

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(const Dataset& ds, std::ostream& out) {
  out << "unit_id,z,s,y,prob_treat";
  if (ds.has_supplied_weights()) out << ",weight";
  for (const auto& name : ds.covariate_names()) out << ',' << csv_escape(name);
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << csv_escape(ds.unit_id(i)) << ',' << ds.z(i) << ',' << school_label(ds.school(i))
        << ',' << ds.y(i) << ',' << shortest(ds.prob_treat(i));
    if (ds.has_supplied_weights()) out << ',' << shortest(ds.extra_weight(i));
    for (const auto& name : ds.covariate_names()) {
      const std::vector<double>& col = *ds.covariate(name);
      out << ',';
      if (!std::isnan(col[i])) out << shortest(col[i]);
    }
    out << '\n';
  }
}

}  // namespace stratbound
