#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sparke/kernel.hpp"
#include "sparke/rng.hpp"

namespace sparke {

/// Cumulative signal levels alpha_bar_t for reverse steps t = 1..T, with the
/// clean end alpha_bar_0 = 1 implied, plus the per-step DDIM noise sigma_t.
class NoiseSchedule {
 public:
  /// `alpha_bars[k]` is alpha_bar at t = k + 1; must lie in (0, 1] and strictly
  /// decrease. `sigmas` empty means deterministic DDIM.
  NoiseSchedule(std::vector<double> alpha_bars, std::vector<double> sigmas = {});

  /// Linear beta schedule on a `train_steps` grid, subsampled ("trailing") to
  /// `steps` DDIM steps. `eta_ddim` scales the stochastic DDIM sigma.
  static NoiseSchedule linear_beta(int train_steps = 1000, double beta_start = 1e-4,
                                   double beta_end = 0.02, int steps = 50,
                                   double eta_ddim = 0.0);

  int steps() const { return static_cast<int>(alpha_bars_.size()); }
  /// t in [0, T]; alpha_bar(0) == 1.
  double alpha_bar(int t) const;
  /// t in [1, T].
  double sigma(int t) const;

 private:
  std::vector<double> alpha_bars_;
  std::vector<double> sigmas_;
};

struct GmmComponent {
  Vector mean;
  double std = 1.0;
  double weight = 1.0;
};

/// A prompt: its embedding and the mixture components it selects.
struct GmmCondition {
  ConditionVector vector;
  std::vector<std::size_t> components;
};

/// Isotropic Gaussian mixture with condition-to-component assignments.
/// Conditional mixtures renormalize component weights within the condition;
/// the unconditional mixture averages the conditional ones under a uniform
/// prompt prior (or uses all components when no conditions are declared).
class GmmSpec {
 public:
  GmmSpec(std::vector<GmmComponent> components, std::vector<GmmCondition> conditions);

  /// grid_size x grid_size modes centered on the origin; each row of the
  /// grid is one condition, embedded as the row's center coordinates.
  static GmmSpec grid(int grid_size = 5, double spacing = 2.0, double std = 0.05);
  static GmmSpec single_gaussian(const Vector& mean, double std);

  Eigen::Index dim() const { return components_.front().mean.size(); }
  const std::vector<GmmComponent>& components() const { return components_; }
  const std::vector<GmmCondition>& conditions() const { return conditions_; }

  /// Index of the condition whose embedding equals `y`; throws if unknown.
  std::size_t find_condition(const ConditionVector& y) const;

  /// First condition that selects `component`, if any.
  std::optional<std::size_t> condition_of(std::size_t component) const;

  /// Exact draw from one component.
  LatentPoint sample_component(std::size_t component, RngStream& rng) const;

  /// Mixture weights (summing to 1) of the conditional or unconditional mixture.
  Vector mixture_weights(std::optional<std::size_t> condition) const;

 private:
  std::vector<GmmComponent> components_;
  std::vector<GmmCondition> conditions_;
};

/// log p_t(z | condition) for the mixture pushed through the forward process:
/// component i becomes N(sqrt(a) mu_i, (a s_i^2 + 1 - a) I).
double gmm_log_density(const LatentPoint& z, double alpha_bar, const GmmSpec& gmm,
                       std::optional<std::size_t> condition);

/// grad_z log p_t(z | condition), with log-sum-exp responsibilities.
Vector gmm_score(const LatentPoint& z, double alpha_bar, const GmmSpec& gmm,
                 std::optional<std::size_t> condition);

Vector gmm_conditional_score(const LatentPoint& z, int t, const ConditionVector& y,
                             const GmmSpec& gmm, const NoiseSchedule& sched);

Vector gmm_unconditional_score(const LatentPoint& z, int t, const GmmSpec& gmm,
                               const NoiseSchedule& sched);

/// sqrt(a) z0 + sqrt(1 - a) eps.
LatentPoint forward_noise(const LatentPoint& z0, double alpha_bar, const Vector& eps);
LatentPoint forward_noise(const LatentPoint& z0, int t, const Vector& eps,
                          const NoiseSchedule& sched);

/// eps_hat = -sqrt(1 - a) score.
Vector epsilon_from_score(const Vector& score, double alpha_bar);
Vector epsilon_from_score(const Vector& score, int t, const NoiseSchedule& sched);

/// (1 + w) eps_cond - w eps_uncond.
Vector cfg_combine(const Vector& eps_cond, const Vector& eps_uncond, double w);

/// (z_t - sqrt(1 - a) eps_hat) / sqrt(a).
LatentPoint tweedie_clean_estimate(const LatentPoint& z_t, const Vector& eps_hat,
                                   double alpha_bar);
LatentPoint tweedie_clean_estimate(const LatentPoint& z_t, const Vector& eps_hat, int t,
                                   const NoiseSchedule& sched);

/// One DDIM update between explicit signal levels. `noise` is required
/// (and only read) when sigma > 0.
LatentPoint ddim_update(const LatentPoint& z_t, const Vector& eps_hat, double alpha_bar_t,
                        double alpha_bar_prev, double sigma, const Vector* noise = nullptr);

/// z_{t-1} from z_t using the schedule's levels and sigma_t.
LatentPoint ddim_step(const LatentPoint& z_t, const Vector& eps_hat, int t,
                      const NoiseSchedule& sched, const Vector* noise = nullptr);

}  // namespace sparke
