#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "gridfr/error.hpp"

namespace gridfr {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule mapped to [a, b] (Newton on P_n from Chebyshev guesses).
inline QuadratureRule gauss_legendre(std::size_t n, double a = 0.0, double b = 1.0) {
  if (n == 0) throw ParameterError("quadrature needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - double(j) * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0;
    double p1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * z * p1 - double(j) * p2) / (j + 1.0);
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

}  // namespace gridfr
