#include "sparke/metrics.hpp"

#include <stdexcept>

namespace sparke {

std::vector<std::vector<LatentPoint>> group_by_condition(std::span<const LatentPoint> samples,
                                                         std::span<const ConditionVector> conditions) {
  if (samples.size() != conditions.size()) {
    throw std::invalid_argument("group_by_condition: samples and conditions differ in length");
  }
  std::vector<ConditionVector> keys;
  std::vector<std::vector<LatentPoint>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t g = 0;
    while (g < keys.size() && !(keys[g].size() == conditions[i].size() && keys[g] == conditions[i])) ++g;
    if (g == keys.size()) {
      keys.push_back(conditions[i]);
      groups.emplace_back();
    }
    groups[g].push_back(samples[i]);
  }
  return groups;
}

double in_batch_similarity(std::span<const std::vector<LatentPoint>> groups) {
  const KernelSpec cosine = KernelSpec::cosine();
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& group : groups) {
    if (group.size() < 2) continue;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j, ++pairs) {
        sum += eval_kernel(cosine, group[i], group[j]);
      }
    }
    total += sum / static_cast<double>(pairs);
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("in_batch_similarity: no group with two or more samples");
  return total / static_cast<double>(counted);
}

namespace {

bool within(const LatentPoint& z, const GmmComponent& c, double radius_mult) {
  const double r = radius_mult * c.std;
  return (z - c.mean).squaredNorm() <= r * r;
}

void check_radius(double radius_mult) {
  if (!(radius_mult > 0.0)) throw std::invalid_argument("metrics: radius_mult must be > 0");
}

}  // namespace

double mode_coverage(std::span<const LatentPoint> samples, const GmmSpec& gmm, double radius_mult) {
  check_radius(radius_mult);
  const auto& comps = gmm.components();
  std::size_t covered = 0;
  for (const auto& c : comps) {
    for (const auto& z : samples) {
      if (within(z, c, radius_mult)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(comps.size());
}

double high_quality_fraction(std::span<const LatentPoint> samples, const GmmSpec& gmm,
                             double radius_mult) {
  check_radius(radius_mult);
  if (samples.empty()) return 0.0;
  std::size_t good = 0;
  for (const auto& z : samples) {
    for (const auto& c : gmm.components()) {
      if (within(z, c, radius_mult)) {
        ++good;
        break;
      }
    }
  }
  return static_cast<double>(good) / static_cast<double>(samples.size());
}

double capture_fraction(std::span<const LatentPoint> samples, const GmmSpec& gmm,
                        std::span<const std::size_t> components, double radius_mult) {
  check_radius(radius_mult);
  if (samples.empty()) return 0.0;
  std::size_t captured = 0;
  for (const auto& z : samples) {
    for (const auto idx : components) {
      if (within(z, gmm.components().at(idx), radius_mult)) {
        ++captured;
        break;
      }
    }
  }
  return static_cast<double>(captured) / static_cast<double>(samples.size());
}

EvalReport evaluate_run(const RunRecord& record, const EvalOptions& options) {
  if (record.samples.empty()) throw std::invalid_argument("evaluate_run: empty record");
  std::vector<LatentPoint> latents;
  std::vector<ConditionVector> conditions;
  latents.reserve(record.samples.size());
  conditions.reserve(record.samples.size());
  for (const auto& s : record.samples) {
    latents.push_back(s.latent);
    conditions.push_back(s.condition);
  }
  const KernelMatrix kz = build_kernel_matrix(options.kernel_z, latents);
  const KernelMatrix ky = build_kernel_matrix(options.kernel_y, conditions);

  EvalReport report;
  report.vendi = vendi_score(kz).value;
  report.rke = rke_score(kz).value;
  report.cond_vendi = cond_vendi_score(kz, ky).value;
  report.cond_rke = cond_rke_score(kz, ky).value;
  const auto groups = group_by_condition(latents, conditions);
  for (const auto& g : groups) {
    if (g.size() >= 2) {
      report.in_batch_similarity = in_batch_similarity(groups);
      break;
    }
  }
  report.mode_coverage = mode_coverage(latents, record.config.gmm, options.radius_mult);
  report.high_quality_fraction = high_quality_fraction(latents, record.config.gmm, options.radius_mult);
  return report;
}

EvalReport evaluate_run(const RunRecord& record) {
  return evaluate_run(record, {record.config.guidance.kernel_z, record.config.guidance.kernel_y, 3.0});
}

}  // namespace sparke
