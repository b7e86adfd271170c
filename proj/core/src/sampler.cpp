#include "sparke/sampler.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace sparke {

void RunConfig::validate() const {
  guidance.validate();
  if (!(cfg_scale >= 0.0) || !std::isfinite(cfg_scale)) {
    throw std::invalid_argument("run: cfg_scale must be finite and >= 0");
  }
  if (prompts.empty()) throw std::invalid_argument("run: no prompts");
  if (samples_per_prompt < 1) throw std::invalid_argument("run: samples_per_prompt must be >= 1");
  for (const auto& y : prompts) gmm.find_condition(y);
  if (reference_points.size() != reference_conditions.size()) {
    throw std::invalid_argument("run: reference points and conditions differ in length");
  }
  for (const auto& p : reference_points) {
    if (p.size() != gmm.dim()) throw std::invalid_argument("run: reference point dimension mismatch");
  }
}

GenerationResult generate_one(const GenerationHistory& history, const ConditionVector& y,
                              const RunConfig& cfg, RngStream& rng) {
  const auto& sched = cfg.sched;
  const auto& gmm = cfg.gmm;
  const auto& guidance = cfg.guidance;
  const std::size_t condition = gmm.find_condition(y);
  const int steps = sched.steps();

  const bool guided = guidance.active() && !history.empty();
  const bool conditional = guidance.mode == GuidanceMode::conditional_rke;
  const Vector weights =
      guided && conditional ? condition_weights(history, y, guidance.kernel_y) : Vector();

  GenerationResult result;
  LatentPoint z = rng.normal_vector(gmm.dim());
  for (int step = 0; step < steps; ++step) {
    const int t = steps - step;
    const double alpha_bar = sched.alpha_bar(t);

    const Vector eps_cond = epsilon_from_score(gmm_score(z, alpha_bar, gmm, condition), alpha_bar);
    const Vector eps = cfg.cfg_scale == 0.0
                           ? eps_cond
                           : cfg_combine(eps_cond,
                                         epsilon_from_score(gmm_score(z, alpha_bar, gmm, std::nullopt),
                                                            alpha_bar),
                                         cfg.cfg_scale);

    const double sigma = sched.sigma(t);
    Vector noise;
    if (sigma > 0.0) noise = rng.normal_vector(gmm.dim());
    LatentPoint z_prev = ddim_step(z, eps, t, sched, sigma > 0.0 ? &noise : nullptr);

    if (guided && step % guidance.frequency == 0) {
      const LatentPoint query = tweedie_clean_estimate(z, eps, alpha_bar);
      GuidanceGradient g = conditional ? cond_irke_gradient_weighted(history, query, weights, guidance)
                                       : irke_gradient(history, query, guidance);
      result.events.push_back({t, query, g.value, history.size()});
      if (guidance.scale == GradientScale::proportional) {
        g.value /= loss_gradient_factor(guidance.mode, history.size());
      }
      // Stop-gradient through the denoiser: d(x0_hat)/dz_t ~ I / sqrt(alpha_bar_t).
      if (guidance.chain_factor) g.value /= std::sqrt(alpha_bar);
      clip_gradient(g, guidance.max_grad_norm);
      z_prev = apply_guidance(z_prev, g, guidance.eta);
    }
    z = std::move(z_prev);
  }
  result.latent = std::move(z);
  return result;
}

RunRecord run_experiment(const RunConfig& cfg) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const auto run_start = Clock::now();

  RunRecord record;
  record.config = cfg;
  GenerationHistory history(cfg.guidance.window);
  history.seed_novelty_reference(cfg.reference_points, cfg.reference_conditions);
  record.samples.reserve(cfg.sample_count());

  std::size_t index = 0;
  for (std::size_t p = 0; p < cfg.prompts.size(); ++p) {
    const auto& y = cfg.prompts[p];
    for (int rep = 0; rep < cfg.samples_per_prompt; ++rep, ++index) {
      RngStream rng(cfg.seed, index);
      const auto start = Clock::now();
      GenerationResult result = generate_one(history, y, cfg, rng);
      const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
      history.push(result.latent, y);
      record.samples.push_back({index, p, std::move(result.latent), y, std::move(result.events), seconds});
    }
  }
  record.history = std::move(history);
  record.wall_seconds = std::chrono::duration<double>(Clock::now() - run_start).count();
  return record;
}

}  // namespace sparke
