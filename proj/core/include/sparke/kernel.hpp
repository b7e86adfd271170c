#pragma once

#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sparke {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A sample in generation space (the GMM plane or any d-dimensional latent).
using LatentPoint = Eigen::VectorXd;
/// A prompt / condition embedding.
using ConditionVector = Eigen::VectorXd;

enum class KernelKind { gaussian, cosine };

std::string_view to_string(KernelKind kind);
KernelKind parse_kernel_kind(std::string_view name);

/// Normalized similarity kernel. Gaussian uses exp(-|a-b|^2 / (2 sigma^2)),
/// cosine is the un-shifted <a,b>/(|a||b|). Both satisfy k(x,x) = 1.
struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double bandwidth = 1.0;  // gaussian only

  static KernelSpec gaussian(double bandwidth);
  static KernelSpec cosine();

  /// Throws std::invalid_argument on a nonpositive gaussian bandwidth.
  void validate() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b);

/// Gradient of k(a, b) with respect to b.
Vector eval_kernel_grad(const KernelSpec& spec, const Vector& a, const Vector& b);

/// Dense symmetric similarity matrix with its trace cached.
class KernelMatrix {
 public:
  /// Validates squareness and symmetry (relative 1e-12).
  explicit KernelMatrix(Matrix entries);

  const Matrix& entries() const { return entries_; }
  Eigen::Index size() const { return entries_.rows(); }
  double trace() const { return trace_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  /// True when every diagonal entry is within `tol` of 1.
  bool has_unit_diagonal(double tol = 1e-12) const;

  static KernelMatrix ones(Eigen::Index n);
  static KernelMatrix identity(Eigen::Index n);

 private:
  Matrix entries_;
  double trace_ = 0.0;
};

KernelMatrix build_kernel_matrix(const KernelSpec& spec, std::span<const Vector> points);

/// k(x,y) / sqrt(k(x,x) k(y,y)); the output diagonal is exactly 1.
KernelMatrix normalize_kernel_matrix(const Matrix& k);

KernelMatrix hadamard(const KernelMatrix& a, const KernelMatrix& b);

/// Sum of squared entries of the kernel matrix over `points`, computed
/// pairwise without materializing the matrix.
double kernel_frobenius_sq(const KernelSpec& spec, std::span<const Vector> points);

}  // namespace sparke
