#pragma once

#include <vector>

namespace fpca {

/// Gauss–Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule (exact for polynomials of degree 2n - 1).
GaussRule gauss_legendre(int n);

/// Composite rule: `nodes_per_interval` Gauss points on each interval
/// [breaks[i], breaks[i+1]]. Zero-length intervals are skipped.
GaussRule composite_gauss(const std::vector<double>& breaks,
                          int nodes_per_interval);

/// Sorted union of `breaks` and `points`, with extra breaks at geometrically
/// shrinking distances (2^-1 ... 2^-levels of the local panel width) on both
/// sides of every point, for integrands with a weak singularity there.
std::vector<double> graded_breaks(const std::vector<double>& breaks,
                                  const std::vector<double>& points,
                                  int levels = 20);

}  // namespace fpca
