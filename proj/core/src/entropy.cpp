#include "sparke/entropy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sparke {

namespace {

constexpr double kPsdTolerance = 1e-8;
constexpr double kUnitDiagonalTolerance = 1e-12;

void require_unit_diagonal(const KernelMatrix& k, const char* who) {
  if (!k.has_unit_diagonal(kUnitDiagonalTolerance)) {
    throw std::invalid_argument(std::string(who) + ": kernel matrix must have unit diagonal");
  }
}

double frobenius_sq(const Matrix& m) { return m.squaredNorm(); }

double von_neumann(const Vector& spectrum) {
  double h = 0.0;
  for (const double l : spectrum) {
    if (l > 0.0) h -= l * std::log(l);  // 0 log 0 := 0
  }
  return h;
}

}  // namespace

EntropyOrder::EntropyOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("EntropyOrder: alpha must be positive and finite");
  }
}

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::vendi:
      return "vendi";
    case ScoreKind::rke:
      return "rke";
    case ScoreKind::cond_rke:
      return "cond_rke";
    case ScoreKind::cond_vendi:
      return "cond_vendi";
    case ScoreKind::order_alpha:
      return "order_alpha";
  }
  return "unknown";
}

Vector normalized_spectrum(const KernelMatrix& k) {
  if (k.size() == 0) throw std::invalid_argument("entropy: empty kernel matrix");
  const double tr = k.trace();
  if (!(tr > 0.0)) throw std::invalid_argument("entropy: kernel matrix has nonpositive trace");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(k.entries() / tr, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("entropy: eigendecomposition failed");
  }
  Vector spectrum = solver.eigenvalues();
  if (spectrum.minCoeff() < -kPsdTolerance) {
    throw std::invalid_argument("entropy: kernel matrix is not positive semi-definite");
  }
  // Eigenvalues at round-off level are exact zeros of the true spectrum; left
  // in, they dominate sum(lambda^alpha) for alpha < 1.
  const double rank_tol = static_cast<double>(spectrum.size()) * std::numeric_limits<double>::epsilon();
  for (auto& v : spectrum) v = v < rank_tol ? 0.0 : std::min(v, 1.0);
  return spectrum;
}

double renyi_matrix_entropy(const KernelMatrix& k, EntropyOrder order) {
  const Vector spectrum = normalized_spectrum(k);
  if (order.is_von_neumann()) return von_neumann(spectrum);
  const double power_sum = spectrum.array().pow(order.alpha()).sum();
  return std::log(power_sum) / (1.0 - order.alpha());
}

DiversityScore vendi_score(const KernelMatrix& k) {
  return {std::exp(renyi_matrix_entropy(k, EntropyOrder(1.0))), ScoreKind::vendi};
}

DiversityScore order_alpha_score(const KernelMatrix& k, EntropyOrder order) {
  return {std::exp(renyi_matrix_entropy(k, order)), ScoreKind::order_alpha};
}

DiversityScore rke_score(const KernelMatrix& k) {
  require_unit_diagonal(k, "rke_score");
  const double n = static_cast<double>(k.size());
  return {n * n / frobenius_sq(k.entries()), ScoreKind::rke};
}

DiversityScore cond_rke_score(const KernelMatrix& kz, const KernelMatrix& ky) {
  if (kz.size() != ky.size()) throw std::invalid_argument("cond_rke_score: shape mismatch");
  require_unit_diagonal(kz, "cond_rke_score");
  require_unit_diagonal(ky, "cond_rke_score");
  const double num = frobenius_sq(ky.entries());
  const double den = frobenius_sq(ky.entries().cwiseProduct(kz.entries()));
  return {num / den, ScoreKind::cond_rke};
}

DiversityScore cond_vendi_score(const KernelMatrix& kz, const KernelMatrix& ky) {
  if (kz.size() != ky.size()) throw std::invalid_argument("cond_vendi_score: shape mismatch");
  require_unit_diagonal(kz, "cond_vendi_score");
  require_unit_diagonal(ky, "cond_vendi_score");
  const EntropyOrder one(1.0);
  const double joint = renyi_matrix_entropy(hadamard(kz, ky), one);
  const double cond = renyi_matrix_entropy(ky, one);
  return {std::exp(joint - cond), ScoreKind::cond_vendi};
}

double irke_loss(std::span<const LatentPoint> points, const KernelSpec& spec) {
  if (points.empty()) throw std::invalid_argument("irke_loss: no points");
  const double n = static_cast<double>(points.size());
  return kernel_frobenius_sq(spec, points) / (n * n);
}

double cond_irke_loss(std::span<const LatentPoint> points,
                      std::span<const ConditionVector> conditions,
                      const KernelSpec& spec_z, const KernelSpec& spec_y) {
  if (points.size() != conditions.size()) {
    throw std::invalid_argument("cond_irke_loss: points and conditions differ in length");
  }
  if (points.empty()) throw std::invalid_argument("cond_irke_loss: no points");
  const std::size_t n = points.size();
  double diag = 0.0;
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double kz = eval_kernel(spec_z, points[i], points[i]);
    const double ky = eval_kernel(spec_y, conditions[i], conditions[i]);
    diag += kz * kz * ky * ky;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double kzij = eval_kernel(spec_z, points[i], points[j]);
      const double kyij = eval_kernel(spec_y, conditions[i], conditions[j]);
      off += kzij * kzij * kyij * kyij;
    }
  }
  const double nd = static_cast<double>(n);
  return (diag + 2.0 * off) / (nd * nd * nd * nd);
}

}  // namespace sparke
