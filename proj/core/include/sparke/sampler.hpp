#pragma once

#include <cstdint>
#include <vector>

#include "sparke/diffusion.hpp"
#include "sparke/guidance.hpp"
#include "sparke/rng.hpp"

namespace sparke {

struct RunConfig {
  NoiseSchedule sched = NoiseSchedule::linear_beta();
  GmmSpec gmm = GmmSpec::grid();
  GuidanceConfig guidance;
  double cfg_scale = 7.5;
  std::vector<ConditionVector> prompts;
  std::uint64_t seed = 0;
  int samples_per_prompt = 1;
  // Optional novelty-guidance reference set, installed ahead of any sample.
  std::vector<LatentPoint> reference_points;
  std::vector<ConditionVector> reference_conditions;

  void validate() const;
  std::size_t sample_count() const { return prompts.size() * static_cast<std::size_t>(samples_per_prompt); }
};

/// One application of diversity guidance inside a reverse trajectory.
struct GuidanceEvent {
  int t = 0;                  // reverse step at which it was applied
  LatentPoint query;          // Tweedie clean estimate of the in-progress sample
  Vector loss_gradient;       // raw loss gradient at `query`
  std::size_t history_size = 0;
};

struct GenerationResult {
  LatentPoint latent;
  std::vector<GuidanceEvent> events;
};

struct SampleRecord {
  std::size_t index = 0;
  std::size_t prompt_index = 0;
  LatentPoint latent;
  ConditionVector condition;
  std::vector<GuidanceEvent> events;
  double wall_seconds = 0.0;
};

struct RunRecord {
  RunConfig config;
  std::vector<SampleRecord> samples;
  GenerationHistory history;
  double wall_seconds = 0.0;
};

/// Reverse-diffuses one sample for prompt `y` from T to 0: CFG noise
/// estimate, DDIM step, then (every `frequency` steps, when active) the
/// diversity gradient evaluated at the Tweedie estimate, clipped, and
/// subtracted from z_{t-1} (see GuidanceConfig::scale and chain_factor).
GenerationResult generate_one(const GenerationHistory& history, const ConditionVector& y,
                              const RunConfig& cfg, RngStream& rng);

/// Sample `index` draws from RngStream(seed, index); prompts are visited in
/// order, each repeated samples_per_prompt times, and every finished sample
/// is pushed to the history before the next one starts.
RunRecord run_experiment(const RunConfig& cfg);

}  // namespace sparke
