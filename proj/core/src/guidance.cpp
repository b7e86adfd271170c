#include "sparke/guidance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sparke {

std::string_view to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::off:
      return "off";
    case GuidanceMode::unconditional_rke:
      return "rke";
    case GuidanceMode::conditional_rke:
      return "sparke";
  }
  return "unknown";
}

GuidanceMode parse_guidance_mode(std::string_view name) {
  if (name == "off" || name == "none") return GuidanceMode::off;
  if (name == "rke" || name == "unconditional_rke") return GuidanceMode::unconditional_rke;
  if (name == "sparke" || name == "conditional_rke") return GuidanceMode::conditional_rke;
  throw std::invalid_argument("unknown guidance mode '" + std::string(name) + "'");
}

std::string_view to_string(GradientScale scale) {
  return scale == GradientScale::exact ? "exact" : "proportional";
}

GradientScale parse_gradient_scale(std::string_view name) {
  if (name == "exact") return GradientScale::exact;
  if (name == "proportional") return GradientScale::proportional;
  throw std::invalid_argument("unknown gradient scale '" + std::string(name) + "'");
}

void GuidanceConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("guidance: eta must be finite and >= 0");
  }
  if (frequency < 1) throw std::invalid_argument("guidance: frequency must be >= 1");
  if (window && *window == 0) throw std::invalid_argument("guidance: window must be positive");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("guidance: max_grad_norm must be > 0");
  kernel_z.validate();
  kernel_y.validate();
}

GenerationHistory::GenerationHistory(std::optional<std::size_t> window) : window_(window) {
  if (window_ && *window_ == 0) throw std::invalid_argument("history: window must be positive");
}

void GenerationHistory::check_dims(const LatentPoint& z, const ConditionVector& y) const {
  if (latents_.empty()) return;
  if (z.size() != latents_.front().size()) {
    throw std::invalid_argument("history: latent dimension mismatch");
  }
  if (y.size() != conditions_.front().size()) {
    throw std::invalid_argument("history: condition dimension mismatch");
  }
}

void GenerationHistory::push(LatentPoint z_final, ConditionVector y) {
  check_dims(z_final, y);
  latents_.push_back(std::move(z_final));
  conditions_.push_back(std::move(y));
  touched_ = true;
  if (!window_) return;
  const auto first_generated = static_cast<std::ptrdiff_t>(reference_count_);
  while (latents_.size() > *window_ && generated_count() > 0) {
    latents_.erase(latents_.begin() + first_generated);
    conditions_.erase(conditions_.begin() + first_generated);
  }
}

void GenerationHistory::seed_novelty_reference(std::span<const LatentPoint> points,
                                               std::span<const ConditionVector> conditions) {
  if (touched_) throw std::logic_error("history: reference set must be seeded on a fresh history");
  if (points.size() != conditions.size()) {
    throw std::invalid_argument("history: reference points and conditions differ in length");
  }
  if (points.empty()) return;
  for (std::size_t i = 0; i < points.size(); ++i) {
    check_dims(points[i], conditions[i]);
    latents_.push_back(points[i]);
    conditions_.push_back(conditions[i]);
  }
  reference_count_ = latents_.size();
  touched_ = true;
}

namespace {

void check_latent(const GenerationHistory& history, const LatentPoint& z) {
  if (!history.empty() && history.latents().front().size() != z.size()) {
    throw std::invalid_argument("guidance: latent dimension does not match history");
  }
}

// sum_i w_i k(z_i, z) grad_z k(z_i, z); w == nullptr means unit weights.
Vector weighted_kernel_sum(std::span<const LatentPoint> latents, const LatentPoint& z,
                           const Vector* weights, const KernelSpec& spec) {
  Vector acc = Vector::Zero(z.size());
  if (spec.kind == KernelKind::gaussian) {
    const double s2 = spec.bandwidth * spec.bandwidth;
    Vector diff(z.size());
    for (std::size_t i = 0; i < latents.size(); ++i) {
      const double w = weights ? (*weights)[static_cast<Eigen::Index>(i)] : 1.0;
      if (w == 0.0) continue;
      diff.noalias() = latents[i] - z;
      const double k = std::exp(-diff.squaredNorm() / (2.0 * s2));
      // k * grad k = k^2 (z_i - z) / s^2
      acc.noalias() += (w * k * k / s2) * diff;
    }
    return acc;
  }
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const double w = weights ? (*weights)[static_cast<Eigen::Index>(i)] : 1.0;
    if (w == 0.0) continue;
    const double k = eval_kernel(spec, latents[i], z);
    acc.noalias() += (w * k) * eval_kernel_grad(spec, latents[i], z);
  }
  return acc;
}

}  // namespace

GuidanceGradient irke_gradient(const GenerationHistory& history, const LatentPoint& z,
                               const GuidanceConfig& cfg) {
  check_latent(history, z);
  if (history.empty()) return {Vector::Zero(z.size()), 0};
  const double n = static_cast<double>(history.size() + 1);
  Vector sum = weighted_kernel_sum(history.latents(), z, nullptr, cfg.kernel_z);
  return {(4.0 / (n * n)) * sum, history.size()};
}

Vector condition_weights(const GenerationHistory& history, const ConditionVector& y,
                         const KernelSpec& kernel_y) {
  Vector w(static_cast<Eigen::Index>(history.size()));
  const auto conditions = history.conditions();
  if (kernel_y.kind == KernelKind::gaussian) {
    kernel_y.validate();
    // k^2 = exp(-|d|^2 / s^2)
    const double s2 = kernel_y.bandwidth * kernel_y.bandwidth;
    for (std::size_t i = 0; i < conditions.size(); ++i) {
      if (conditions[i].size() != y.size()) throw std::invalid_argument("guidance: condition dimension mismatch");
      w[static_cast<Eigen::Index>(i)] = std::exp(-(conditions[i] - y).squaredNorm() / s2);
    }
    return w;
  }
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const double k = eval_kernel(kernel_y, conditions[i], y);
    w[static_cast<Eigen::Index>(i)] = k * k;
  }
  return w;
}

GuidanceGradient cond_irke_gradient(const GenerationHistory& history, const LatentPoint& z,
                                    const ConditionVector& y, const GuidanceConfig& cfg) {
  return cond_irke_gradient_weighted(history, z, condition_weights(history, y, cfg.kernel_y), cfg);
}

GuidanceGradient cond_irke_gradient_weighted(const GenerationHistory& history,
                                             const LatentPoint& z, const Vector& weights,
                                             const GuidanceConfig& cfg) {
  check_latent(history, z);
  if (static_cast<std::size_t>(weights.size()) != history.size()) {
    throw std::invalid_argument("guidance: condition weights do not match history length");
  }
  if (history.empty()) return {Vector::Zero(z.size()), 0};
  const double n = static_cast<double>(history.size() + 1);
  const double n2 = n * n;
  Vector sum = weighted_kernel_sum(history.latents(), z, &weights, cfg.kernel_z);
  return {(4.0 / (n2 * n2)) * sum, history.size()};
}

double loss_gradient_factor(GuidanceMode mode, std::size_t history_size) {
  const double n = static_cast<double>(history_size + 1);
  switch (mode) {
    case GuidanceMode::unconditional_rke:
      return 4.0 / (n * n);
    case GuidanceMode::conditional_rke:
      return 4.0 / (n * n * n * n);
    case GuidanceMode::off:
      break;
  }
  throw std::invalid_argument("loss_gradient_factor: guidance is off");
}

LatentPoint apply_guidance(const LatentPoint& z, const GuidanceGradient& g, double eta) {
  if (!z.allFinite() || !g.value.allFinite() || !std::isfinite(eta)) {
    throw std::invalid_argument("apply_guidance: non-finite input");
  }
  if (g.value.size() != z.size()) throw std::invalid_argument("apply_guidance: dimension mismatch");
  if (eta == 0.0) return z;
  return z - eta * g.value;
}

void clip_gradient(GuidanceGradient& g, double max_norm) {
  const double norm = g.value.norm();
  if (norm > max_norm) g.value *= max_norm / norm;
}

}  // namespace sparke
