#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparke_cli/commands.hpp"

namespace sparke::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sparke_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv(kOutDirEnv);
  }
  void TearDown() override {
    unsetenv(kOutDirEnv);
    fs::remove_all(dir_);
  }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  ExperimentConfig small(const std::string& sub) {
    auto cfg = parse_config(json{{"samples_per_prompt", 3}});
    cfg.output_dir = (dir_ / sub).string();
    return cfg;
  }

  fs::path dir_;
};

TEST_F(CliTest, DefaultsAreExplicitInEcho) {
  const auto echo = to_json(parse_config(json::object()));
  EXPECT_EQ(echo["guidance"]["eta"], 0.03);
  EXPECT_EQ(echo["guidance"]["frequency"], 10);
  EXPECT_EQ(echo["guidance"]["kernel_z"]["bandwidth"], 0.8);
  EXPECT_EQ(echo["guidance"]["kernel_y"]["bandwidth"], 0.3);
  EXPECT_EQ(echo["guidance"]["window"], nullptr);
  EXPECT_EQ(echo["cfg_scale"], 7.5);
  EXPECT_EQ(echo["schedule"]["steps"], 50);
  EXPECT_EQ(echo["prompts"].size(), 5u);
  EXPECT_EQ(to_json(parse_config(echo)), echo);
}

TEST_F(CliTest, UnknownKeysRejected) {
  EXPECT_THROW(parse_config(json{{"sed", 1}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"guidance", {{"etta", 0.1}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"guidance", {{"kernel_z", {{"sigma", 1.0}}}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"gmm", {{"kind", "ring"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"sweep", {{"temperature", {1.0}}}}}), ConfigError);
}

TEST_F(CliTest, InvalidValuesRejected) {
  EXPECT_THROW(parse_config(json{{"guidance", {{"eta", -0.5}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"guidance", {{"mode", "vendi"}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"seed", -3}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"seed", "7"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"prompts", {{0.0, 0.5}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"bench", {{"trials", 2}}}}), ConfigError);
  EXPECT_THROW(load_config(std::string("/nonexistent/config.json")), ConfigError);
  EXPECT_THROW(load_config(write("broken.json", "{ not json")), ConfigError);
}

TEST_F(CliTest, OutputDirPrecedence) {
  auto cfg = parse_config(json{{"output", {{"dir", "from_file"}}}});
  apply_overrides(cfg, {});
  EXPECT_EQ(cfg.output_dir, "from_file");
  setenv(kOutDirEnv, "from_env", 1);
  apply_overrides(cfg, {});
  EXPECT_EQ(cfg.output_dir, "from_env");
  Overrides ov;
  ov.out = "from_flag";
  apply_overrides(cfg, ov);
  EXPECT_EQ(cfg.output_dir, "from_flag");
}

TEST_F(CliTest, FlagOverrides) {
  auto cfg = parse_config(json::object());
  Overrides ov;
  ov.seed = 99;
  ov.kernel = KernelKind::cosine;
  ov.eta = 0.07;
  ov.mode = GuidanceMode::unconditional_rke;
  apply_overrides(cfg, ov);
  EXPECT_EQ(cfg.run.seed, 99u);
  EXPECT_EQ(cfg.run.guidance.kernel_z.kind, KernelKind::cosine);
  EXPECT_EQ(cfg.run.guidance.eta, 0.07);
  EXPECT_EQ(cfg.run.guidance.mode, GuidanceMode::unconditional_rke);
  ov = {};
  ov.kernel = KernelKind::gaussian;
  ov.bandwidth = -1.0;
  EXPECT_THROW(apply_overrides(cfg, ov), ConfigError);
}

TEST_F(CliTest, RunWritesDeterministicOutputs) {
  std::ostringstream log;
  const auto a = small("a"), b = small("b");
  cmd_run(a, log);
  cmd_run(b, log);
  for (const char* f : {"samples.csv", "report.json", "history.json", "config.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(a.output_dir) / f)) << f;
  }
  EXPECT_EQ(slurp(fs::path(a.output_dir) / "samples.csv"), slurp(fs::path(b.output_dir) / "samples.csv"));
  const auto report = json::parse(slurp(fs::path(a.output_dir) / "report.json"));
  for (const char* key : {"vendi", "rke", "cond_vendi", "cond_rke", "in_batch_similarity", "mode_coverage",
                          "high_quality_fraction"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_EQ(report["sample_count"], 15);
  const auto history = json::parse(slurp(fs::path(a.output_dir) / "history.json"));
  EXPECT_EQ(history["entries"].size(), 15u);

  // Re-running from the echoed config reproduces the samples.
  auto echo = parse_config(json::parse(slurp(fs::path(a.output_dir) / "config.json")));
  echo.output_dir = (dir_ / "c").string();
  cmd_run(echo, log);
  EXPECT_EQ(slurp(fs::path(a.output_dir) / "samples.csv"), slurp(dir_ / "c" / "samples.csv"));
}

TEST_F(CliTest, SamplesCsvLayout) {
  const auto cfg = small("x");
  const auto csv = samples_csv(run_experiment(cfg.run));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "index,prompt_id,x,y");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 15);
}

TEST_F(CliTest, EtaSweepInRunGivesOneReportPerEta) {
  auto cfg = small("sweep");
  cfg.sweep.eta = {0.0, 0.01, 0.03, 0.05, 0.07, 0.09};
  std::ostringstream log;
  cmd_run(cfg, log);
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%03d", i);
    EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / name / "report.json")) << name;
  }
}

TEST_F(CliTest, SweepRowsAndDegenerateSweep) {
  auto cfg = small("grid");
  cfg.sweep.cfg_scale = {2, 4, 6, 8};
  cfg.sweep.mode = {GuidanceMode::off, GuidanceMode::conditional_rke};
  std::ostringstream log;
  cmd_sweep(cfg, log);
  std::istringstream csv(slurp(fs::path(cfg.output_dir) / "sweep.csv"));
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  EXPECT_EQ(lines, 9);

  auto single = small("single");
  single.sweep.eta = {single.run.guidance.eta};
  cmd_sweep(single, log);
  const auto plain = small("plain");
  cmd_run(plain, log);
  EXPECT_EQ(slurp(fs::path(single.output_dir) / "point_000" / "samples.csv"),
            slurp(fs::path(plain.output_dir) / "samples.csv"));

  EXPECT_THROW(cmd_sweep(small("empty"), log), ConfigError);
}

TEST_F(CliTest, KernelSweepGivesPerKindReports) {
  auto cfg = small("kernels");
  cfg.sweep.kernel = {KernelKind::gaussian, KernelKind::cosine};
  std::ostringstream log;
  cmd_sweep(cfg, log);
  const auto a = json::parse(slurp(fs::path(cfg.output_dir) / "point_000" / "config.json"));
  const auto b = json::parse(slurp(fs::path(cfg.output_dir) / "point_001" / "config.json"));
  EXPECT_EQ(a["guidance"]["kernel_z"]["kind"], "gaussian");
  EXPECT_EQ(b["guidance"]["kernel_z"]["kind"], "cosine");
}

TEST_F(CliTest, BenchSkipsOverCap) {
  auto cfg = small("bench");
  cfg.bench.methods = {bench::Method::vendi_eigen, bench::Method::rke_frobenius};
  cfg.bench.vendi_sizes = {16, 8192};
  cfg.bench.rke_sizes = {16, 32, 64};
  cfg.bench.options.min_trial_seconds = 1e-4;
  cfg.bench.pipeline_history = 20;
  cfg.bench.pipeline_samples = 2;
  std::ostringstream log;
  cmd_bench(cfg, log);
  EXPECT_NE(log.str().find("\"warning\""), std::string::npos);
  const auto doc = json::parse(slurp(fs::path(cfg.output_dir) / "bench.json"));
  ASSERT_EQ(doc["results"].size(), 1u);
  EXPECT_EQ(doc["results"][0]["method"], "rke_frobenius");
  EXPECT_TRUE(doc["results"][0].contains("fitted_exponent"));
  EXPECT_EQ(doc["pipeline"].size(), 4u);
  EXPECT_TRUE(fs::exists(fs::path(cfg.output_dir) / "bench.csv"));
}

TEST_F(CliTest, ScoreExamples) {
  ScoreOptions opt;
  opt.kernel_z = KernelSpec::gaussian(1.0);
  std::ostringstream out;
  opt.vectors_path = write("pair.csv", "0,0\n1,0\n");
  cmd_score(opt, out);
  EXPECT_NEAR(json::parse(out.str())["rke"].get<double>(), 1.4621171572600098, 1e-14);

  out.str("");
  opt.vectors_path = write("same.json", "[[1,2],[1,2],[1,2],[1,2],[1,2]]");
  cmd_score(opt, out);
  EXPECT_DOUBLE_EQ(json::parse(out.str())["rke"].get<double>(), 1.0);

  out.str("");
  opt.kernel_z = KernelSpec::gaussian(1e-3);
  opt.vectors_path = write("far.csv", "x,y\n0,0\n10,0\n0,10\n10,10\n20,20\n");
  cmd_score(opt, out);
  EXPECT_NEAR(json::parse(out.str())["rke"].get<double>(), 5.0, 1e-12);

  out.str("");
  opt.kernel_z = KernelSpec::gaussian(1.0);
  opt.vectors_path = write("v.csv", "0,0\n1,0\n3,3\n");
  opt.conditions_path = write("c.csv", "1,0\n1,0\n0,1\n");
  cmd_score(opt, out);
  const auto doc = json::parse(out.str());
  EXPECT_TRUE(doc.contains("cond_rke"));
  EXPECT_TRUE(doc.contains("cond_vendi"));
}

TEST_F(CliTest, ScoreReadsRunOutput) {
  const auto cfg = small("scored");
  std::ostringstream log;
  cmd_run(cfg, log);
  const auto rows = read_vectors((fs::path(cfg.output_dir) / "samples.csv").string());
  ASSERT_EQ(rows.size(), 15u);
  EXPECT_EQ(rows.front().size(), 2);
}

TEST_F(CliTest, ScoreErrorsMapToExitCodes) {
  ScoreOptions opt;
  opt.vectors_path = write("ragged.csv", "0,0\n1\n");
  std::ostringstream out, err;
  EXPECT_EQ(guarded(err, [&] { cmd_score(opt, out); }), kConfigError);
  EXPECT_NE(err.str().find("\"error\":\"input\""), std::string::npos);

  opt.vectors_path = write("ok.csv", "0,0\n1,0\n");
  opt.conditions_path = write("short.csv", "1,0\n");
  EXPECT_EQ(guarded(err, [&] { cmd_score(opt, out); }), kConfigError);

  opt.conditions_path.reset();
  opt.vectors_path = (dir_ / "missing.csv").string();
  EXPECT_EQ(guarded(err, [&] { cmd_score(opt, out); }), kRuntimeError);
  EXPECT_EQ(guarded(err, [] {}), kOk);
}

}  // namespace
}  // namespace sparke::cli
