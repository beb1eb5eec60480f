#pragma once

#include <cstdint>

namespace stratbound {

/// Counter-based generator: draw n from stream k is a fixed hash of (k, n),
/// so any draw can be recomputed independently of the others. Work split
/// across threads stays deterministic as long as each consumer owns its own
/// stream key.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t key, std::uint64_t start = 0)
      : key_(key), counter_(start) {}

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns an exact endpoint,
  /// so it is safe to feed through an inverse CDF.
  double next_unit();

  /// Standard normal draw via the inverse CDF.
  double next_normal();

  /// Uniform integer on [0, n), n > 0.
  std::uint32_t next_below(std::uint32_t n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Labels for the independent substreams used across the project. A stream
/// key is derived from (seed, stream, index); e.g. bootstrap replicate r uses
/// (seed, Stream::resample, r) and never touches the population streams.
enum class Stream : std::uint64_t {
  population = 1,
  assignment = 2,
  outcome = 3,
  resample = 4,
  noise = 5,
  scenario = 6,
};

std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// Inverse standard normal CDF on (0, 1). Rational approximation with
/// absolute error below 1.2e-9, which is ample for simulation draws.
double normal_quantile(double p);

}  // namespace stratbound
