#include <gtest/gtest.h>

#include <cmath>

#include "sparke/bench.hpp"

namespace sparke::bench {
namespace {

TEST(Bench, SlopeOfExactPowerLaw) {
  const std::vector<std::size_t> sizes{16, 32, 64, 128, 256, 512};
  std::vector<double> times;
  for (const auto n : sizes) times.push_back(3e-9 * std::pow(static_cast<double>(n), 2.0));
  EXPECT_NEAR(fit_loglog_slope(sizes, times), 2.0, 1e-12);
}

// Only the upper half of the grid enters the fit.
TEST(Bench, SlopeIgnoresLowerHalf) {
  const std::vector<std::size_t> sizes{2, 4, 8, 16};
  const std::vector<double> times{1.0, 1.0, 8.0, 16.0};
  EXPECT_NEAR(fit_loglog_slope(sizes, times), 1.0, 1e-12);
  EXPECT_THROW(fit_loglog_slope({4}, {1.0}), std::invalid_argument);
}

TEST(Bench, InputsAreDeterministic) {
  EXPECT_EQ(make_points(10, 3, 5), make_points(10, 3, 5));
  EXPECT_NE(make_points(10, 3, 5), make_points(10, 3, 6));
}

TEST(Bench, ResultShape) {
  BenchOptions opt;
  opt.trials = 3;
  opt.min_trial_seconds = 1e-4;
  for (const auto m : {Method::vendi_eigen, Method::rke_frobenius, Method::irke_gradient, Method::cond_irke_gradient}) {
    const auto r = bench_method(m, {16, 32, 64}, opt);
    EXPECT_EQ(r.method, m);
    ASSERT_EQ(r.wall_times.size(), 3u);
    for (const double t : r.wall_times) EXPECT_GT(t, 0.0);
    EXPECT_TRUE(std::isfinite(r.fitted_exponent));
    EXPECT_GT(r.peak_alloc, 0u);
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
}

TEST(Bench, Rejects) {
  BenchOptions opt;
  EXPECT_THROW(bench_method(Method::rke_frobenius, {}, opt), std::invalid_argument);
  EXPECT_THROW(bench_method(Method::rke_frobenius, {32, 16}, opt), std::invalid_argument);
  opt.trials = 2;
  EXPECT_THROW(bench_method(Method::rke_frobenius, {16}, opt), std::invalid_argument);
  opt.trials = 3;
  opt.eigen_cap = 64;
  EXPECT_THROW(bench_method(Method::vendi_eigen, {32, 128}, opt), CapExceeded);
  EXPECT_THROW(parse_method("vendi_gradient"), std::invalid_argument);
}

TEST(Bench, PipelineOverheadRows) {
  RunConfig base;
  base.prompts = {base.gmm.conditions()[0].vector};
  GuidanceConfig off;
  off.mode = GuidanceMode::off;
  GuidanceConfig zero;
  zero.eta = 0.0;
  const auto rows = bench_pipeline_overhead(base, {{"off", off}, {"eta0", zero}, {"sparke", GuidanceConfig{}}}, 50, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].relative_overhead, 0.0);
  for (const auto& r : rows) EXPECT_GT(r.seconds_per_sample, 0.0);
}

}  // namespace
}  // namespace sparke::bench
