#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sparke/diffusion.hpp"
#include "sparke/entropy.hpp"
#include "sparke/sampler.hpp"

namespace sparke {

struct EvalReport {
  double vendi = 1.0;
  double rke = 1.0;
  double cond_vendi = 1.0;
  double cond_rke = 1.0;
  // Empty when no prompt has two or more samples.
  std::optional<double> in_batch_similarity;
  double mode_coverage = 0.0;
  double high_quality_fraction = 0.0;
};

struct EvalOptions {
  KernelSpec kernel_z = KernelSpec::gaussian(0.8);
  KernelSpec kernel_y = KernelSpec::gaussian(0.3);
  double radius_mult = 3.0;
};

/// Partitions samples by exact equality of their condition vectors, in order
/// of first appearance.
std::vector<std::vector<LatentPoint>> group_by_condition(std::span<const LatentPoint> samples,
                                                         std::span<const ConditionVector> conditions);

/// Mean over groups (of size >= 2) of the mean pairwise cosine similarity.
double in_batch_similarity(std::span<const std::vector<LatentPoint>> groups);

/// Fraction of mixture components with at least one sample within
/// radius_mult * std of their mean.
double mode_coverage(std::span<const LatentPoint> samples, const GmmSpec& gmm,
                     double radius_mult = 3.0);

/// Fraction of samples within radius_mult * std of some component mean.
double high_quality_fraction(std::span<const LatentPoint> samples, const GmmSpec& gmm,
                             double radius_mult = 3.0);

/// Fraction of samples within radius_mult * std of any of `components`.
double capture_fraction(std::span<const LatentPoint> samples, const GmmSpec& gmm,
                        std::span<const std::size_t> components, double radius_mult = 3.0);

EvalReport evaluate_run(const RunRecord& record, const EvalOptions& options);

/// Evaluates with the run's own guidance kernels and radius_mult = 3.
EvalReport evaluate_run(const RunRecord& record);

}  // namespace sparke
