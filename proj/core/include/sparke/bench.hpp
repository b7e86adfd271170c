#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sparke/sampler.hpp"

namespace sparke::bench {

enum class Method { vendi_eigen, rke_frobenius, irke_gradient, cond_irke_gradient };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct BenchResult {
  Method method = Method::irke_gradient;
  std::vector<std::size_t> sizes;
  std::vector<double> wall_times;  // seconds per call, median over trials
  double fitted_exponent = 0.0;    // log-log slope over the upper half of sizes
  std::size_t peak_alloc = 0;      // bytes, estimated from the working set
  int trials = 0;
  int threads = 1;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
};

/// Raised when a size exceeds the configured cap for the O(n^3) method.
class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchOptions {
  std::size_t dim = 2;
  int trials = 5;
  std::uint64_t seed = 0;
  std::size_t eigen_cap = 4096;
  double bandwidth = 1.0;
  double min_trial_seconds = 2e-3;  // repeat cheap calls until a trial lasts this long
};

/// Least-squares slope of log(time) against log(size) over the upper half of
/// the points (indices size/2 .. end).
double fit_loglog_slope(const std::vector<std::size_t>& sizes, const std::vector<double>& times);

/// Deterministic benchmark inputs: `n` standard-normal points in `dim`
/// dimensions, drawn from the stream keyed by (seed, n).
std::vector<LatentPoint> make_points(std::size_t n, std::size_t dim, std::uint64_t seed);

/// Times `method` over strictly increasing `sizes`. Before timing each size the
/// benchmarked routine is cross-checked against an independent reference
/// computation; a mismatch throws std::runtime_error.
BenchResult bench_method(Method method, const std::vector<std::size_t>& sizes,
                         const BenchOptions& options);

struct PipelineVariant {
  std::string label;
  GuidanceConfig guidance;
};

struct OverheadRow {
  std::string label;
  double seconds_per_sample = 0.0;  // median over timed samples
  double relative_overhead = 0.0;   // seconds_per_sample / baseline - 1
};

/// Per-sample generation time for each variant against a frozen history of
/// `history_size` exact mixture draws. The first variant is the baseline.
std::vector<OverheadRow> bench_pipeline_overhead(const RunConfig& base,
                                                 const std::vector<PipelineVariant>& variants,
                                                 std::size_t history_size, int samples);

}  // namespace sparke::bench
