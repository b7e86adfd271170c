#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparke/metrics.hpp"
#include "sparke_cli/config.hpp"

namespace sparke::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

/// Bad user input other than the config file (malformed vectors, ragged rows).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes samples.csv, report.json, history.json and config.json into `dir`.
void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunRecord& record,
                       const EvalReport& report);

/// samples.csv body: index, prompt_id, then one column per coordinate printed
/// with %.17g. Contains no timing, so equal runs give equal bytes.
std::string samples_csv(const RunRecord& record);

/// Runs the config; with sweep axes present, one subdirectory per point.
void cmd_run(const ExperimentConfig& cfg, std::ostream& log);
/// Cross product of the sweep axes; ConfigError when no axis is set.
void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
/// Writes bench.json and bench.csv. Methods whose sizes exceed the eigen cap
/// are skipped with a warning on `log`.
void cmd_bench(const ExperimentConfig& cfg, std::ostream& log);

struct ScoreOptions {
  std::string vectors_path;
  std::optional<std::string> conditions_path;
  KernelSpec kernel_z = KernelSpec::gaussian(0.8);
  KernelSpec kernel_y = KernelSpec::gaussian(0.3);
};

/// Rows of numbers from CSV (header optional; `index` and `prompt_id`
/// columns are dropped) or a JSON array of arrays.
std::vector<Vector> read_vectors(const std::string& path);

/// Prints {"n", "vendi", "rke"[, "cond_vendi", "cond_rke"]} to `out`.
void cmd_score(const ScoreOptions& opt, std::ostream& out);

/// Runs `body`, mapping exceptions to exit codes and a one-line JSON error
/// ({"error": kind, "message": text}) on `err`.
int guarded(std::ostream& err, const std::function<void()>& body);

}  // namespace sparke::cli
