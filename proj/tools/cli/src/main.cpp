#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "sparke_cli/commands.hpp"

using namespace sparke;
using namespace sparke::cli;

namespace {

struct CommonFlags {
  std::optional<std::string> config;
  Overrides ov;
  std::string kernel;
  std::string mode;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)");
  cmd->add_option("--seed", f.ov.seed, "override the run seed");
  cmd->add_option("--out", f.ov.out, "output directory (beats $" + std::string(kOutDirEnv) + " and output.dir)");
  cmd->add_option("--kernel", f.kernel, "latent kernel kind")->check(CLI::IsMember({"gaussian", "cosine"}));
  cmd->add_option("--bandwidth", f.ov.bandwidth, "latent gaussian bandwidth");
  cmd->add_option("--eta", f.ov.eta, "diversity guidance scale");
  cmd->add_option("--mode", f.mode, "guidance mode")->check(CLI::IsMember({"off", "rke", "sparke"}));
}

ExperimentConfig resolve(CommonFlags& f) {
  if (!f.kernel.empty()) f.ov.kernel = parse_kernel_kind(f.kernel);
  if (!f.mode.empty()) f.ov.mode = parse_guidance_mode(f.mode);
  auto cfg = load_config(f.config);
  apply_overrides(cfg, f.ov);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparke: prompt-aware RKE diversity guidance on analytic mixtures"};
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, bench_f;
  auto* run = app.add_subcommand("run", "generate samples and write samples.csv, report.json, history.json");
  add_common(run, run_f);
  auto* sweep = app.add_subcommand("sweep", "cross product of the config's sweep axes; writes sweep.csv");
  add_common(sweep, sweep_f);
  auto* bench_cmd = app.add_subcommand("bench", "complexity and pipeline-overhead benchmarks");
  add_common(bench_cmd, bench_f);

  ScoreOptions score_opt;
  std::string score_kernel = "gaussian", cond_kernel = "gaussian";
  double score_bw = score_opt.kernel_z.bandwidth, cond_bw = score_opt.kernel_y.bandwidth;
  auto* score = app.add_subcommand("score", "diversity scores of a set of vectors");
  score->add_option("vectors", score_opt.vectors_path, "CSV or JSON rows")->required();
  score->add_option("--conditions", score_opt.conditions_path, "aligned condition rows");
  score->add_option("--kernel", score_kernel, "vector kernel kind")->check(CLI::IsMember({"gaussian", "cosine"}));
  score->add_option("--bandwidth", score_bw, "vector gaussian bandwidth");
  score->add_option("--cond-kernel", cond_kernel, "condition kernel kind")
      ->check(CLI::IsMember({"gaussian", "cosine"}));
  score->add_option("--cond-bandwidth", cond_bw, "condition gaussian bandwidth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kConfigError;
  }

  return guarded(std::cerr, [&] {
    if (run->parsed()) {
      cmd_run(resolve(run_f), std::cout);
    } else if (sweep->parsed()) {
      cmd_sweep(resolve(sweep_f), std::cout);
    } else if (bench_cmd->parsed()) {
      auto cfg = resolve(bench_f);
      if (bench_f.ov.seed) cfg.bench.options.seed = *bench_f.ov.seed;
      cmd_bench(cfg, std::cerr);
    } else {
      score_opt.kernel_z = {parse_kernel_kind(score_kernel), score_bw};
      score_opt.kernel_y = {parse_kernel_kind(cond_kernel), cond_bw};
      cmd_score(score_opt, std::cout);
    }
  });
}
