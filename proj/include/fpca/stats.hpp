#pragma once

#include <vector>

namespace fpca {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;  ///< sqrt(RSS / (n − 2) / Sxx); 0 when n = 2
};

/// Ordinary least squares of ys on xs. Throws std::invalid_argument for fewer
/// than two points, mismatched lengths or constant xs.
SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace fpca
