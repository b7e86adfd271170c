#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "sparke/kernel.hpp"

namespace sparke {

/// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic, platform-independent random stream keyed by (seed, stream).
/// The engine is mt19937_64 (fully specified by the standard); uniform and
/// normal variates are produced here rather than by <random> distributions,
/// whose algorithms are implementation-defined.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();
  Vector normal_vector(Eigen::Index dim);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace sparke
