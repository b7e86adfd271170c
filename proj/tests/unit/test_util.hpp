#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sparke/kernel.hpp"
#include "sparke/rng.hpp"

namespace sparke::testing {

inline std::vector<Vector> random_points(RngStream& rng, std::size_t n, Eigen::Index d,
                                         double scale = 1.0) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(scale * rng.normal_vector(d));
  return out;
}

// Central differences of f at x.
inline Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Vector& got, const Vector& want, double floor = 1e-300) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

}  // namespace sparke::testing
