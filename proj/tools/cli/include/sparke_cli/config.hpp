#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparke/bench.hpp"
#include "sparke/sampler.hpp"

namespace sparke::cli {

/// Invalid, unreadable or schema-violating configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BenchSuite {
  std::vector<bench::Method> methods{bench::Method::vendi_eigen, bench::Method::rke_frobenius,
                                     bench::Method::irke_gradient, bench::Method::cond_irke_gradient};
  std::vector<std::size_t> vendi_sizes{128, 256, 512, 1024};
  std::vector<std::size_t> rke_sizes{256, 512, 1024, 2048, 4096};
  std::vector<std::size_t> gradient_sizes{256, 512, 1024, 2048, 4096, 8192, 16384};
  bench::BenchOptions options;
  std::size_t pipeline_history = 1000;  // 0 disables the pipeline table
  int pipeline_samples = 20;

  const std::vector<std::size_t>& sizes_for(bench::Method m) const;
};

struct SweepAxes {
  std::vector<double> eta;
  std::vector<double> cfg_scale;
  std::vector<KernelKind> kernel;
  std::vector<GuidanceMode> mode;

  bool empty() const { return eta.empty() && cfg_scale.empty() && kernel.empty() && mode.empty(); }
};

/// Everything a subcommand needs, with every default made explicit.
struct ExperimentConfig {
  RunConfig run;
  nlohmann::json gmm_echo;       // the gmm section as resolved
  nlohmann::json schedule_echo;  // the schedule section as resolved
  double radius_mult = 3.0;
  std::string output_dir = "sparke_out";
  BenchSuite bench;
  SweepAxes sweep;
};

/// Command-line overrides; unset fields leave the file value alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<KernelKind> kernel;
  std::optional<double> bandwidth;
  std::optional<double> eta;
  std::optional<GuidanceMode> mode;
};

/// Environment variable naming the output directory. Precedence:
/// --out, then this variable, then the config file's output.dir.
inline constexpr const char* kOutDirEnv = "SPARKE_OUT_DIR";

/// Parses a config document. Unknown keys anywhere raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::optional<std::string>& path);

/// Applies overrides and the output-dir environment variable, then validates.
void apply_overrides(ExperimentConfig& cfg, const Overrides& ov);

/// Serializes the resolved config; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace sparke::cli
