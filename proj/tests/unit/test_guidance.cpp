#include <gtest/gtest.h>

#include <cmath>

#include "sparke/entropy.hpp"
#include "sparke/guidance.hpp"
#include "test_util.hpp"

namespace sparke {
namespace {

GuidanceConfig unit_config() {
  GuidanceConfig cfg;
  cfg.kernel_z = KernelSpec::gaussian(1.0);
  cfg.kernel_y = KernelSpec::cosine();
  return cfg;
}

std::vector<Vector> with(std::span<const Vector> base, const Vector& extra) {
  std::vector<Vector> out(base.begin(), base.end());
  out.push_back(extra);
  return out;
}

TEST(Guidance, EmptyHistoryGivesZero) {
  const GenerationHistory h;
  const auto cfg = unit_config();
  const Vector z{{0.3, -0.2}};
  const auto g = irke_gradient(h, z, cfg);
  EXPECT_EQ(g.value, Vector::Zero(2));
  EXPECT_EQ(g.terms_used, 0u);
  EXPECT_EQ(cond_irke_gradient(h, z, Vector{{1.0, 0.0}}, cfg).value, Vector::Zero(2));
}

TEST(Guidance, SinglePointOracles) {
  GenerationHistory h;
  h.push(Vector{{0.0, 0.0}}, Vector{{1.0, 0.0}});
  const auto cfg = unit_config();
  const Vector z{{1.0, 0.0}};
  const auto g = irke_gradient(h, z, cfg);
  EXPECT_NEAR(g.value[0], -0.36787944117144233, 1e-15);
  EXPECT_EQ(g.value[1], 0.0);
  EXPECT_EQ(g.terms_used, 1u);

  // k_Y = 0.5 under the cosine kernel at 60 degrees.
  const Vector y{{0.5, std::sqrt(3.0) / 2.0}};
  const auto gc = cond_irke_gradient(h, z, y, cfg);
  EXPECT_NEAR(gc.value[0], -0.022992465073215146, 1e-15);
  EXPECT_EQ(gc.value[1], 0.0);

  const auto moved = apply_guidance(z, g, 0.03);
  EXPECT_NEAR(moved[0], 1.0110363832351432, 1e-15);
  EXPECT_EQ(moved[1], 0.0);
}

TEST(Guidance, FarHistoryVanishes) {
  GenerationHistory h;
  h.push(Vector{{0.0, 0.0}}, Vector{{1.0}});
  EXPECT_LT(irke_gradient(h, Vector{{20.0, 0.0}}, unit_config()).norm(), 1e-12);
}

TEST(Guidance, OrthogonalConditionsIsolate) {
  GenerationHistory h;
  h.push(Vector{{0.0, 0.0}}, Vector{{1.0, 0.0}});
  h.push(Vector{{0.5, 0.1}}, Vector{{1.0, 0.0}});
  const auto g = cond_irke_gradient(h, Vector{{0.2, 0.0}}, Vector{{0.0, 2.0}}, unit_config());
  EXPECT_EQ(g.value, Vector::Zero(2));
}

TEST(Guidance, IdenticalConditionsReduce) {
  RngStream rng(41, 0);
  auto cfg = unit_config();
  cfg.kernel_y = KernelSpec::gaussian(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    GenerationHistory h;
    const Vector y = rng.normal_vector(3);
    const auto pts = testing::random_points(rng, 1 + trial, 4);
    for (const auto& p : pts) h.push(p, y);
    const Vector z = rng.normal_vector(4);
    const double n = static_cast<double>(h.size() + 1);
    const Vector want = irke_gradient(h, z, cfg).value / (n * n);
    EXPECT_LT(testing::rel_err(cond_irke_gradient(h, z, y, cfg).value, want), 1e-12);
  }
}

// Gradients against central differences of the losses, n <= 64, d <= 8.
TEST(Guidance, GradientsMatchFiniteDifferences) {
  RngStream rng(42, 0);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 63);
    const Eigen::Index d = 1 + trial % 8;
    const bool cosine = trial % 5 == 4 && d > 1;  // cosine is constant in 1-D
    const double bw = 0.5 + 0.1 * (trial % 7);
    auto cfg = unit_config();
    cfg.kernel_z = cosine ? KernelSpec::cosine() : KernelSpec::gaussian(bw);
    cfg.kernel_y = KernelSpec::gaussian(0.7);
    // Spread on the bandwidth scale so kernel values stay well above round-off.
    const double spread = cosine ? 1.0 : 0.8 * bw / std::sqrt(static_cast<double>(d));
    GenerationHistory h;
    const auto pts = testing::random_points(rng, n, d, spread);
    const auto conds = testing::random_points(rng, n, 2, 0.4);
    for (std::size_t i = 0; i < n; ++i) h.push(pts[i], conds[i]);
    const Vector z = spread * rng.normal_vector(d);
    const Vector y = 0.4 * rng.normal_vector(2);

    const Vector fd = testing::central_diff(
        [&](const Vector& x) { return irke_loss(with(pts, x), cfg.kernel_z); }, z, 1e-5);
    EXPECT_LT(testing::rel_err(irke_gradient(h, z, cfg).value, fd), 1e-5) << "trial " << trial;

    const auto all_y = with(conds, y);
    const Vector fdc = testing::central_diff(
        [&](const Vector& x) { return cond_irke_loss(with(pts, x), all_y, cfg.kernel_z, cfg.kernel_y); }, z,
        1e-5);
    EXPECT_LT(testing::rel_err(cond_irke_gradient(h, z, y, cfg).value, fdc), 1e-5) << "trial " << trial;
  }
}

TEST(Guidance, SmallStepDescends) {
  RngStream rng(43, 0);
  const auto cfg = unit_config();
  for (int trial = 0; trial < 20; ++trial) {
    GenerationHistory h;
    const auto pts = testing::random_points(rng, 10, 2);
    for (const auto& p : pts) h.push(p, Vector{{1.0}});
    const Vector z = rng.normal_vector(2);
    const auto g = irke_gradient(h, z, cfg);
    double eta = 1.0;
    const double before = irke_loss(with(pts, z), cfg.kernel_z);
    while (eta > 1e-12 && irke_loss(with(pts, apply_guidance(z, g, eta)), cfg.kernel_z) >= before) eta *= 0.5;
    EXPECT_LT(irke_loss(with(pts, apply_guidance(z, g, eta)), cfg.kernel_z), before);
  }
}

TEST(Guidance, ApplyGuidanceIdentities) {
  const Vector z{{1.0, -2.0}};
  EXPECT_EQ(apply_guidance(z, {Vector{{5.0, 5.0}}, 1}, 0.0), z);
  EXPECT_EQ(apply_guidance(z, {Vector::Zero(2), 0}, 0.7), z);
  EXPECT_THROW(apply_guidance(z, {Vector{{NAN, 0.0}}, 1}, 0.1), std::invalid_argument);
  EXPECT_THROW(apply_guidance(z, {Vector::Zero(3), 0}, 0.1), std::invalid_argument);
}

TEST(Guidance, ClipGradient) {
  GuidanceGradient g{Vector{{3.0, 4.0}}, 1};
  clip_gradient(g, 1.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
  EXPECT_NEAR(g.value[0], 0.6, 1e-15);
  GuidanceGradient small{Vector{{0.3, 0.4}}, 1};
  clip_gradient(small, 1.0);
  EXPECT_EQ(small.value, (Vector{{0.3, 0.4}}));
}

TEST(Guidance, LossGradientFactor) {
  EXPECT_DOUBLE_EQ(loss_gradient_factor(GuidanceMode::unconditional_rke, 1), 1.0);
  EXPECT_DOUBLE_EQ(loss_gradient_factor(GuidanceMode::conditional_rke, 1), 0.25);
  EXPECT_THROW(loss_gradient_factor(GuidanceMode::off, 1), std::invalid_argument);
}

TEST(Guidance, ConfigValidation) {
  GuidanceConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.eta, 0.03);
  EXPECT_EQ(cfg.frequency, 10);
  EXPECT_EQ(cfg.kernel_z, KernelSpec::gaussian(0.8));
  EXPECT_EQ(cfg.kernel_y, KernelSpec::gaussian(0.3));
  EXPECT_FALSE(cfg.window.has_value());
  cfg.eta = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.eta = 0.0;
  EXPECT_FALSE(cfg.active());
  cfg.frequency = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_guidance_mode("sparke"), GuidanceMode::conditional_rke);
  EXPECT_EQ(parse_guidance_mode("rke"), GuidanceMode::unconditional_rke);
  EXPECT_EQ(parse_guidance_mode("off"), GuidanceMode::off);
  EXPECT_THROW(parse_guidance_mode("vendi"), std::invalid_argument);
}

TEST(History, PushAndWindow) {
  GenerationHistory h(150);
  for (int i = 0; i < 151; ++i) h.push(Vector{{static_cast<double>(i)}}, Vector{{0.0}});
  EXPECT_EQ(h.size(), 150u);
  EXPECT_EQ(h.latents().front()[0], 1.0);
  EXPECT_EQ(h.latents().back()[0], 150.0);
  EXPECT_THROW(GenerationHistory(0), std::invalid_argument);
}

TEST(History, ReferencesSurviveEviction) {
  GenerationHistory h(12);
  std::vector<Vector> refs, conds;
  for (int i = 0; i < 10; ++i) {
    refs.push_back(Vector{{-1.0 - i}});
    conds.push_back(Vector{{1.0}});
  }
  h.seed_novelty_reference(refs, conds);
  for (int i = 0; i < 5; ++i) h.push(Vector{{static_cast<double>(i)}}, Vector{{1.0}});
  EXPECT_EQ(h.size(), 12u);
  EXPECT_EQ(h.reference_count(), 10u);
  EXPECT_EQ(h.generated_count(), 2u);
  EXPECT_EQ(h.latents()[0][0], -1.0);
  EXPECT_EQ(h.latents()[10][0], 3.0);
}

TEST(History, SeedingContract) {
  GenerationHistory empty;
  empty.seed_novelty_reference({}, {});
  EXPECT_EQ(empty.size(), 0u);

  GenerationHistory h;
  std::vector<Vector> refs(100, Vector{{0.5, 0.5}}), conds(100, Vector{{1.0}});
  h.seed_novelty_reference(refs, conds);
  EXPECT_EQ(h.size(), 100u);
  EXPECT_EQ(h.reference_count(), 100u);

  GenerationHistory used;
  used.push(Vector{{0.0, 0.0}}, Vector{{1.0}});
  EXPECT_THROW(used.seed_novelty_reference(refs, conds), std::logic_error);
  GenerationHistory mismatch;
  EXPECT_THROW(mismatch.seed_novelty_reference(refs, std::vector<Vector>(3, Vector{{1.0}})),
               std::invalid_argument);
}

TEST(History, DimensionMismatch) {
  GenerationHistory h;
  h.push(Vector{{0.0, 0.0}}, Vector{{1.0}});
  EXPECT_THROW(h.push(Vector{{0.0}}, Vector{{1.0}}), std::invalid_argument);
  EXPECT_THROW(h.push(Vector{{0.0, 0.0}}, Vector{{1.0, 0.0}}), std::invalid_argument);
  EXPECT_THROW(irke_gradient(h, Vector{{0.0, 0.0, 0.0}}, unit_config()), std::invalid_argument);
}

}  // namespace
}  // namespace sparke
