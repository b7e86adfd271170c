#include "sparke/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sparke {

namespace {

void check_same_dim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("kernel: dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
}

double checked_norm(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) {
    throw std::invalid_argument("kernel: cosine kernel is undefined for a zero vector");
  }
  return norm;
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gaussian:
      return "gaussian";
    case KernelKind::cosine:
      return "cosine";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "gaussian" || name == "rbf") return KernelKind::gaussian;
  if (name == "cosine") return KernelKind::cosine;
  throw std::invalid_argument("unknown kernel kind '" + std::string(name) + "'");
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec spec{KernelKind::gaussian, bandwidth};
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::cosine() { return KernelSpec{KernelKind::cosine, 1.0}; }

void KernelSpec::validate() const {
  if (kind == KernelKind::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth))) {
    throw std::invalid_argument("kernel: gaussian bandwidth must be positive and finite");
  }
}

double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b) {
  spec.validate();
  check_same_dim(a, b);
  switch (spec.kind) {
    case KernelKind::gaussian: {
      const double sq = (a - b).squaredNorm();
      return std::exp(-sq / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    case KernelKind::cosine: {
      const double na = checked_norm(a);
      const double nb = checked_norm(b);
      return a.dot(b) / (na * nb);
    }
  }
  throw std::logic_error("unreachable kernel kind");
}

Vector eval_kernel_grad(const KernelSpec& spec, const Vector& a, const Vector& b) {
  spec.validate();
  check_same_dim(a, b);
  switch (spec.kind) {
    case KernelKind::gaussian: {
      const double s2 = spec.bandwidth * spec.bandwidth;
      const double k = std::exp(-(a - b).squaredNorm() / (2.0 * s2));
      return (k / s2) * (a - b);
    }
    case KernelKind::cosine: {
      const double na = checked_norm(a);
      const double nb = checked_norm(b);
      return a / (na * nb) - (a.dot(b) / na) * b / (nb * nb * nb);
    }
  }
  throw std::logic_error("unreachable kernel kind");
}

KernelMatrix::KernelMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("KernelMatrix: matrix must be square");
  }
  if (entries_.size() > 0) {
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= 1e-12 * scale)) {
      throw std::invalid_argument("KernelMatrix: matrix is not symmetric");
    }
  }
  trace_ = entries_.trace();
}

bool KernelMatrix::has_unit_diagonal(double tol) const {
  return ((entries_.diagonal().array() - 1.0).abs() <= tol).all();
}

KernelMatrix KernelMatrix::ones(Eigen::Index n) { return KernelMatrix(Matrix::Ones(n, n)); }

KernelMatrix KernelMatrix::identity(Eigen::Index n) {
  return KernelMatrix(Matrix::Identity(n, n));
}

KernelMatrix build_kernel_matrix(const KernelSpec& spec, std::span<const Vector> points) {
  spec.validate();
  if (points.empty()) throw std::invalid_argument("build_kernel_matrix: no points");
  const auto n = static_cast<Eigen::Index>(points.size());
  const auto d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("build_kernel_matrix: dimension mismatch");
  }
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = eval_kernel(spec, points[i], points[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = eval_kernel(spec, points[i], points[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return KernelMatrix(std::move(k));
}

KernelMatrix normalize_kernel_matrix(const Matrix& k) {
  if (k.rows() != k.cols()) throw std::invalid_argument("normalize_kernel_matrix: not square");
  const Vector diag = k.diagonal();
  if (!(diag.array() > 0.0).all()) {
    throw std::invalid_argument("normalize_kernel_matrix: nonpositive diagonal entry");
  }
  const Vector inv_sqrt = diag.cwiseSqrt().cwiseInverse();
  Matrix out = inv_sqrt.asDiagonal() * k * inv_sqrt.asDiagonal();
  // Exact symmetry and unit diagonal regardless of rounding in the scaling.
  out = (0.5 * (out + out.transpose())).eval();
  out.diagonal().setOnes();
  return KernelMatrix(std::move(out));
}

KernelMatrix hadamard(const KernelMatrix& a, const KernelMatrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hadamard: shape mismatch");
  return KernelMatrix(a.entries().cwiseProduct(b.entries()));
}

double kernel_frobenius_sq(const KernelSpec& spec, std::span<const Vector> points) {
  spec.validate();
  if (points.empty()) throw std::invalid_argument("kernel_frobenius_sq: no points");
  const std::size_t n = points.size();
  double diag = 0.0;
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double kii = eval_kernel(spec, points[i], points[i]);
    diag += kii * kii;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double kij = eval_kernel(spec, points[i], points[j]);
      off += kij * kij;
    }
  }
  return diag + 2.0 * off;
}

}  // namespace sparke
