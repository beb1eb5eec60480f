#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stratbound {

/// Post-treatment category a unit can end up in under either assignment.
enum class School : std::uint8_t { echs = 0, hq = 1, lq = 2 };

inline constexpr int kNumSchools = 3;

/// Latent stratum under monotone program entry and no switching between the
/// two non-program categories: three always-taker types plus two complier
/// types, named by the category attended when the program seat is refused
/// or unavailable.
enum class Stratum : std::uint8_t { eat = 0, hqat = 1, hqc = 2, lqat = 3, lqc = 4 };

inline constexpr int kNumStrata = 5;

inline constexpr std::array<Stratum, kNumStrata> kAllStrata = {
    Stratum::eat, Stratum::hqat, Stratum::hqc, Stratum::lqat, Stratum::lqc};

inline constexpr bool is_complier(Stratum r) {
  return r == Stratum::lqc || r == Stratum::hqc;
}

std::string_view school_label(School s);
std::string_view stratum_label(Stratum r);

/// Observed cells are (assignment, category) pairs, indexed z * 3 + category.
inline constexpr int kNumGroups = 6;

inline constexpr int group_index(int z, School s) {
  return z * kNumSchools + static_cast<int>(s);
}

std::string group_label(int g);

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationIssue {
  std::size_t row = 0;  // 1-based data row; 0 when not tied to a row
  std::string field;
  std::string message;
};

/// Input rows that cannot form a usable dataset.
struct ValidationError : Error {
  explicit ValidationError(std::vector<ValidationIssue> issues);
  std::vector<ValidationIssue> issues;
};

/// A well-formed dataset that cannot support the requested analysis.
struct PreconditionError : Error {
  using Error::Error;
};

/// Bad command-line flags or configuration files.
struct ConfigError : Error {
  using Error::Error;
};

/// Record of a value pushed back into its valid range.
struct TruncationEvent {
  std::string quantity;
  double raw = 0;
  double adjusted = 0;
};

}  // namespace stratbound
