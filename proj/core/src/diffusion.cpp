#include "sparke/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sparke {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha_bars, std::vector<double> sigmas)
    : alpha_bars_(std::move(alpha_bars)), sigmas_(std::move(sigmas)) {
  if (alpha_bars_.empty()) throw std::invalid_argument("schedule: no steps");
  if (sigmas_.empty()) sigmas_.assign(alpha_bars_.size(), 0.0);
  if (sigmas_.size() != alpha_bars_.size()) {
    throw std::invalid_argument("schedule: sigma and alpha_bar lengths differ");
  }
  double prev = 1.0;
  for (std::size_t k = 0; k < alpha_bars_.size(); ++k) {
    const double a = alpha_bars_[k];
    if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("schedule: alpha_bar outside (0, 1]");
    if (k > 0 && !(a < prev)) {
      throw std::invalid_argument("schedule: alpha_bar must strictly decrease in t");
    }
    const double s = sigmas_[k];
    if (!(s >= 0.0) || s > std::sqrt(1.0 - prev) + 1e-12) {
      throw std::invalid_argument("schedule: sigma_t exceeds sqrt(1 - alpha_bar_{t-1})");
    }
    prev = a;
  }
}

NoiseSchedule NoiseSchedule::linear_beta(int train_steps, double beta_start, double beta_end,
                                         int steps, double eta_ddim) {
  if (train_steps < 1 || steps < 1 || steps > train_steps) {
    throw std::invalid_argument("schedule: need 1 <= steps <= train_steps");
  }
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw std::invalid_argument("schedule: need 0 < beta_start <= beta_end < 1");
  }
  if (!(eta_ddim >= 0.0)) throw std::invalid_argument("schedule: eta_ddim must be >= 0");
  std::vector<double> cumulative(static_cast<std::size_t>(train_steps));
  double prod = 1.0;
  for (int i = 0; i < train_steps; ++i) {
    const double beta = train_steps == 1
                            ? beta_start
                            : beta_start + (beta_end - beta_start) * i / (train_steps - 1);
    prod *= 1.0 - beta;
    cumulative[static_cast<std::size_t>(i)] = prod;
  }
  const double ratio = static_cast<double>(train_steps) / steps;
  std::vector<double> alpha_bars(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    const auto idx = static_cast<std::size_t>(std::lround(t * ratio)) - 1;
    alpha_bars[static_cast<std::size_t>(t - 1)] = cumulative[idx];
  }
  std::vector<double> sigmas(alpha_bars.size(), 0.0);
  if (eta_ddim > 0.0) {
    double prev = 1.0;
    for (std::size_t k = 0; k < alpha_bars.size(); ++k) {
      const double a = alpha_bars[k];
      sigmas[k] = eta_ddim * std::sqrt((1.0 - prev) / (1.0 - a)) * std::sqrt(1.0 - a / prev);
      prev = a;
    }
  }
  return NoiseSchedule(std::move(alpha_bars), std::move(sigmas));
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw std::out_of_range("schedule: t out of range");
  return t == 0 ? 1.0 : alpha_bars_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::sigma(int t) const {
  if (t < 1 || t > steps()) throw std::out_of_range("schedule: t out of range");
  return sigmas_[static_cast<std::size_t>(t - 1)];
}

GmmSpec::GmmSpec(std::vector<GmmComponent> components, std::vector<GmmCondition> conditions)
    : components_(std::move(components)), conditions_(std::move(conditions)) {
  if (components_.empty()) throw std::invalid_argument("gmm: no components");
  const auto d = components_.front().mean.size();
  if (d == 0) throw std::invalid_argument("gmm: zero-dimensional mean");
  for (const auto& c : components_) {
    if (c.mean.size() != d) throw std::invalid_argument("gmm: component dimension mismatch");
    if (!(c.std > 0.0)) throw std::invalid_argument("gmm: component std must be > 0");
    if (!(c.weight > 0.0)) throw std::invalid_argument("gmm: component weight must be > 0");
  }
  for (const auto& cond : conditions_) {
    if (cond.components.empty()) throw std::invalid_argument("gmm: condition selects no component");
    if (cond.vector.size() != conditions_.front().vector.size()) {
      throw std::invalid_argument("gmm: condition dimension mismatch");
    }
    for (const auto idx : cond.components) {
      if (idx >= components_.size()) throw std::invalid_argument("gmm: condition component index out of range");
    }
  }
}

GmmSpec GmmSpec::grid(int grid_size, double spacing, double std) {
  if (grid_size < 1) throw std::invalid_argument("gmm: grid_size must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("gmm: spacing must be > 0");
  std::vector<GmmComponent> components;
  std::vector<GmmCondition> conditions;
  const double offset = 0.5 * (grid_size - 1) * spacing;
  for (int row = 0; row < grid_size; ++row) {
    GmmCondition cond;
    const double y = row * spacing - offset;
    cond.vector = Vector{{0.0, y}};
    for (int col = 0; col < grid_size; ++col) {
      const double x = col * spacing - offset;
      cond.components.push_back(components.size());
      components.push_back({Vector{{x, y}}, std, 1.0});
    }
    conditions.push_back(std::move(cond));
  }
  return GmmSpec(std::move(components), std::move(conditions));
}

GmmSpec GmmSpec::single_gaussian(const Vector& mean, double std) {
  GmmCondition cond{mean, {0}};
  return GmmSpec({{mean, std, 1.0}}, {std::move(cond)});
}

std::size_t GmmSpec::find_condition(const ConditionVector& y) const {
  for (std::size_t i = 0; i < conditions_.size(); ++i) {
    if (conditions_[i].vector.size() == y.size() && conditions_[i].vector == y) return i;
  }
  throw std::invalid_argument("gmm: unknown condition");
}

std::optional<std::size_t> GmmSpec::condition_of(std::size_t component) const {
  for (std::size_t i = 0; i < conditions_.size(); ++i) {
    for (const auto idx : conditions_[i].components) {
      if (idx == component) return i;
    }
  }
  return std::nullopt;
}

LatentPoint GmmSpec::sample_component(std::size_t component, RngStream& rng) const {
  const auto& c = components_.at(component);
  return c.mean + c.std * rng.normal_vector(c.mean.size());
}

Vector GmmSpec::mixture_weights(std::optional<std::size_t> condition) const {
  const auto m = static_cast<Eigen::Index>(components_.size());
  Vector w = Vector::Zero(m);
  auto add_condition = [&](const GmmCondition& cond, double prior) {
    double total = 0.0;
    for (const auto idx : cond.components) total += components_[idx].weight;
    for (const auto idx : cond.components) {
      w[static_cast<Eigen::Index>(idx)] += prior * components_[idx].weight / total;
    }
  };
  if (condition) {
    if (*condition >= conditions_.size()) throw std::invalid_argument("gmm: unknown condition");
    add_condition(conditions_[*condition], 1.0);
  } else if (conditions_.empty()) {
    for (Eigen::Index i = 0; i < m; ++i) w[i] = components_[static_cast<std::size_t>(i)].weight;
    w /= w.sum();
  } else {
    const double prior = 1.0 / static_cast<double>(conditions_.size());
    for (const auto& cond : conditions_) add_condition(cond, prior);
  }
  return w;
}

namespace {

struct NoisedMixture {
  Vector log_terms;  // log w_i + log N_i(z)
  std::vector<Vector> pulls;  // (m_i - z) / v_i; empty for inactive components
};

NoisedMixture noised_mixture(const LatentPoint& z, double alpha_bar, const GmmSpec& gmm,
                             std::optional<std::size_t> condition) {
  if (z.size() != gmm.dim()) throw std::invalid_argument("gmm: latent dimension mismatch");
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw std::invalid_argument("gmm: alpha_bar outside (0, 1]");
  const Vector weights = gmm.mixture_weights(condition);
  const auto& comps = gmm.components();
  const double d = static_cast<double>(z.size());
  const double root = std::sqrt(alpha_bar);
  NoisedMixture out;
  out.log_terms = Vector::Constant(weights.size(), -std::numeric_limits<double>::infinity());
  out.pulls.resize(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (weights[ii] <= 0.0) continue;
    const double var = alpha_bar * comps[i].std * comps[i].std + (1.0 - alpha_bar);
    Vector delta = root * comps[i].mean - z;
    out.log_terms[ii] = std::log(weights[ii]) - 0.5 * d * std::log(2.0 * std::numbers::pi * var) -
                        delta.squaredNorm() / (2.0 * var);
    out.pulls[i] = delta / var;
  }
  return out;
}

}  // namespace

double gmm_log_density(const LatentPoint& z, double alpha_bar, const GmmSpec& gmm,
                       std::optional<std::size_t> condition) {
  const auto mix = noised_mixture(z, alpha_bar, gmm, condition);
  const double top = mix.log_terms.maxCoeff();
  double total = 0.0;
  for (std::size_t i = 0; i < mix.pulls.size(); ++i) {
    if (mix.pulls[i].size() > 0) total += std::exp(mix.log_terms[static_cast<Eigen::Index>(i)] - top);
  }
  return top + std::log(total);
}

Vector gmm_score(const LatentPoint& z, double alpha_bar, const GmmSpec& gmm,
                 std::optional<std::size_t> condition) {
  const auto mix = noised_mixture(z, alpha_bar, gmm, condition);
  const double top = mix.log_terms.maxCoeff();
  // Scalar exp: Eigen's packet exp clamps -inf to a tiny positive value.
  Vector resp = Vector::Zero(mix.log_terms.size());
  for (std::size_t i = 0; i < mix.pulls.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (mix.pulls[i].size() > 0) resp[ii] = std::exp(mix.log_terms[ii] - top);
  }
  resp /= resp.sum();
  Vector score = Vector::Zero(z.size());
  for (std::size_t i = 0; i < mix.pulls.size(); ++i) {
    const double r = resp[static_cast<Eigen::Index>(i)];
    if (r > 0.0) score.noalias() += r * mix.pulls[i];
  }
  return score;
}

Vector gmm_conditional_score(const LatentPoint& z, int t, const ConditionVector& y,
                             const GmmSpec& gmm, const NoiseSchedule& sched) {
  return gmm_score(z, sched.alpha_bar(t), gmm, gmm.find_condition(y));
}

Vector gmm_unconditional_score(const LatentPoint& z, int t, const GmmSpec& gmm,
                               const NoiseSchedule& sched) {
  return gmm_score(z, sched.alpha_bar(t), gmm, std::nullopt);
}

LatentPoint forward_noise(const LatentPoint& z0, double alpha_bar, const Vector& eps) {
  if (z0.size() != eps.size()) throw std::invalid_argument("forward_noise: dimension mismatch");
  if (!eps.allFinite()) throw std::invalid_argument("forward_noise: non-finite noise");
  return std::sqrt(alpha_bar) * z0 + std::sqrt(1.0 - alpha_bar) * eps;
}

LatentPoint forward_noise(const LatentPoint& z0, int t, const Vector& eps,
                          const NoiseSchedule& sched) {
  if (t < 1 || t > sched.steps()) throw std::out_of_range("forward_noise: t out of range");
  return forward_noise(z0, sched.alpha_bar(t), eps);
}

Vector epsilon_from_score(const Vector& score, double alpha_bar) {
  return -std::sqrt(1.0 - alpha_bar) * score;
}

Vector epsilon_from_score(const Vector& score, int t, const NoiseSchedule& sched) {
  return epsilon_from_score(score, sched.alpha_bar(t));
}

Vector cfg_combine(const Vector& eps_cond, const Vector& eps_uncond, double w) {
  if (eps_cond.size() != eps_uncond.size()) throw std::invalid_argument("cfg_combine: dimension mismatch");
  if (w == 0.0) return eps_cond;
  return (1.0 + w) * eps_cond - w * eps_uncond;
}

LatentPoint tweedie_clean_estimate(const LatentPoint& z_t, const Vector& eps_hat,
                                   double alpha_bar) {
  if (!(alpha_bar > 0.0)) throw std::invalid_argument("tweedie: alpha_bar must be > 0");
  if (z_t.size() != eps_hat.size()) throw std::invalid_argument("tweedie: dimension mismatch");
  return (z_t - std::sqrt(1.0 - alpha_bar) * eps_hat) / std::sqrt(alpha_bar);
}

LatentPoint tweedie_clean_estimate(const LatentPoint& z_t, const Vector& eps_hat, int t,
                                   const NoiseSchedule& sched) {
  return tweedie_clean_estimate(z_t, eps_hat, sched.alpha_bar(t));
}

LatentPoint ddim_update(const LatentPoint& z_t, const Vector& eps_hat, double alpha_bar_t,
                        double alpha_bar_prev, double sigma, const Vector* noise) {
  if (!(sigma >= 0.0) || sigma > std::sqrt(1.0 - alpha_bar_prev) + 1e-12) {
    throw std::invalid_argument("ddim: sigma_t violates sqrt(1 - alpha_bar_{t-1}) bound");
  }
  const LatentPoint x0 = tweedie_clean_estimate(z_t, eps_hat, alpha_bar_t);
  // Direction pointing to z_t; algebraically equal to eps_hat.
  const Vector direction = alpha_bar_t < 1.0
                               ? Vector((z_t - std::sqrt(alpha_bar_t) * x0) / std::sqrt(1.0 - alpha_bar_t))
                               : eps_hat;
  const double dir_coef = std::sqrt(std::max(0.0, 1.0 - alpha_bar_prev - sigma * sigma));
  LatentPoint out = std::sqrt(alpha_bar_prev) * x0 + dir_coef * direction;
  if (sigma > 0.0) {
    if (noise == nullptr || noise->size() != z_t.size()) {
      throw std::invalid_argument("ddim: stochastic step needs a noise vector of matching size");
    }
    out.noalias() += sigma * *noise;
  }
  return out;
}

LatentPoint ddim_step(const LatentPoint& z_t, const Vector& eps_hat, int t,
                      const NoiseSchedule& sched, const Vector* noise) {
  if (t < 1 || t > sched.steps()) throw std::out_of_range("ddim_step: t out of range");
  return ddim_update(z_t, eps_hat, sched.alpha_bar(t), sched.alpha_bar(t - 1), sched.sigma(t),
                     noise);
}

}  // namespace sparke
