#pragma once

#include <span>
#include <string_view>

#include "sparke/kernel.hpp"

namespace sparke {

/// Order of a matrix Renyi entropy; alpha = 1 is the von Neumann limit.
class EntropyOrder {
 public:
  explicit EntropyOrder(double alpha);
  double alpha() const { return alpha_; }
  bool is_von_neumann() const { return alpha_ == 1.0; }

 private:
  double alpha_;
};

enum class ScoreKind { vendi, rke, cond_rke, cond_vendi, order_alpha };

std::string_view to_string(ScoreKind kind);

/// Effective mode count; 1 for fully redundant samples, n for n distinct ones.
struct DiversityScore {
  double value = 1.0;
  ScoreKind kind = ScoreKind::rke;
};

/// Eigenvalues of K / tr(K), clamped to [0, 1]; values below n * machine
/// epsilon are set to zero. Throws if K is indefinite
/// beyond a -1e-8 tolerance (on the trace-normalized scale) or has zero trace.
Vector normalized_spectrum(const KernelMatrix& k);

double renyi_matrix_entropy(const KernelMatrix& k, EntropyOrder order);

DiversityScore vendi_score(const KernelMatrix& k);

/// exp of the order-alpha entropy.
DiversityScore order_alpha_score(const KernelMatrix& k, EntropyOrder order);

/// n^2 / sum_ij k_ij^2 for a unit-diagonal kernel matrix. No eigendecomposition.
DiversityScore rke_score(const KernelMatrix& k);

/// |K_Y|_F^2 / |K_Y . K_Z|_F^2.
DiversityScore cond_rke_score(const KernelMatrix& kz, const KernelMatrix& ky);

/// exp(H1((K_Z . K_Y)/n) - H1(K_Y/n)). This is an order-1 analogue of the
/// conditional RKE ratio; it is not a published Conditional-Vendi formula.
DiversityScore cond_vendi_score(const KernelMatrix& kz, const KernelMatrix& ky);

/// (1/n^2) sum_ij k(z_i, z_j)^2 = 1 / rke.
double irke_loss(std::span<const LatentPoint> points, const KernelSpec& spec);

/// (1/n^4) sum_ij k_Z(z_i, z_j)^2 k_Y(y_i, y_j)^2.
double cond_irke_loss(std::span<const LatentPoint> points,
                      std::span<const ConditionVector> conditions,
                      const KernelSpec& spec_z, const KernelSpec& spec_y);

}  // namespace sparke
