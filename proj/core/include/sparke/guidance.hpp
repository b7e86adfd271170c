#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparke/kernel.hpp"

namespace sparke {

enum class GuidanceMode { off, unconditional_rke, conditional_rke };

/// How the sampler scales the loss gradient before the latent update.
/// `exact` applies the true loss gradient (with its 4/n^2 or 4/n^4 factor);
/// `proportional` drops that positive factor and applies the bare kernel sum.
enum class GradientScale { exact, proportional };

std::string_view to_string(GuidanceMode mode);
/// Accepts "off", "rke"/"unconditional_rke", "sparke"/"conditional_rke".
GuidanceMode parse_guidance_mode(std::string_view name);
std::string_view to_string(GradientScale scale);
GradientScale parse_gradient_scale(std::string_view name);

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::conditional_rke;
  double eta = 0.03;
  int frequency = 10;  // apply every `frequency` reverse steps
  KernelSpec kernel_z = KernelSpec::gaussian(0.8);
  KernelSpec kernel_y = KernelSpec::gaussian(0.3);
  std::optional<std::size_t> window;  // empty: complete history
  double max_grad_norm = 1e3;         // safety rail against kernel collisions
  GradientScale scale = GradientScale::proportional;
  // Divide the clean-space gradient by sqrt(alpha_bar_t) (denoiser treated as
  // constant). Off: the clean-space gradient is applied to the latent as is.
  bool chain_factor = false;

  void validate() const;
  bool active() const { return mode != GuidanceMode::off && eta > 0.0; }
};

/// Append-only store of completed generations. Reference entries (novelty
/// guidance) form a prefix and are never evicted by the window.
class GenerationHistory {
 public:
  GenerationHistory() = default;
  explicit GenerationHistory(std::optional<std::size_t> window);

  std::size_t size() const { return latents_.size(); }
  bool empty() const { return latents_.empty(); }
  std::size_t reference_count() const { return reference_count_; }
  std::size_t generated_count() const { return latents_.size() - reference_count_; }
  const std::optional<std::size_t>& window() const { return window_; }

  std::span<const LatentPoint> latents() const { return latents_; }
  std::span<const ConditionVector> conditions() const { return conditions_; }

  /// Appends a finished sample. When a window is set and the history exceeds
  /// it, the oldest generated entries are evicted.
  void push(LatentPoint z_final, ConditionVector y);

  /// Installs a reference set ahead of any generated sample. Must be called on
  /// a fresh history.
  void seed_novelty_reference(std::span<const LatentPoint> points,
                              std::span<const ConditionVector> conditions);

 private:
  void check_dims(const LatentPoint& z, const ConditionVector& y) const;

  std::vector<LatentPoint> latents_;
  std::vector<ConditionVector> conditions_;
  std::size_t reference_count_ = 0;
  std::optional<std::size_t> window_;
  bool touched_ = false;
};

struct GuidanceGradient {
  Vector value;
  std::size_t terms_used = 0;

  double norm() const { return value.norm(); }
};

/// Gradient of the inverse-RKE loss over {history, z} with respect to z:
/// (4/n^2) sum_i k(z_i, z) grad_z k(z_i, z), n = |history| + 1. O(n d).
GuidanceGradient irke_gradient(const GenerationHistory& history, const LatentPoint& z,
                               const GuidanceConfig& cfg);

/// k_Y(y_i, y)^2 for every history entry. Computed once per generation.
Vector condition_weights(const GenerationHistory& history, const ConditionVector& y,
                         const KernelSpec& kernel_y);

/// Gradient of the conditional inverse-RKE loss with respect to z:
/// (4/n^4) sum_i k_Z(z_i, z) k_Y(y_i, y)^2 grad_z k_Z(z_i, z).
GuidanceGradient cond_irke_gradient(const GenerationHistory& history, const LatentPoint& z,
                                    const ConditionVector& y, const GuidanceConfig& cfg);

/// Same as above with precomputed condition weights (see condition_weights).
GuidanceGradient cond_irke_gradient_weighted(const GenerationHistory& history,
                                             const LatentPoint& z,
                                             const Vector& weights,
                                             const GuidanceConfig& cfg);

/// Positive factor relating the loss gradient to the bare kernel sum for a
/// history of `history_size` entries: 4/n^2 (unconditional) or 4/n^4
/// (conditional), n = history_size + 1.
double loss_gradient_factor(GuidanceMode mode, std::size_t history_size);

/// z - eta * g. Returns z untouched when eta == 0.
LatentPoint apply_guidance(const LatentPoint& z, const GuidanceGradient& g, double eta);

/// Rescales g so its norm does not exceed max_norm.
void clip_gradient(GuidanceGradient& g, double max_norm);

}  // namespace sparke
