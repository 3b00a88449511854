#pragma once

#include <string>
#include <vector>

#include "fpca/basis.hpp"
#include "fpca/rates.hpp"
#include "fpca/simulate.hpp"

namespace fpca {

/// Estimated eigenfunctions (columns of U, diagonalized-basis coefficients)
/// on a 401-point grid over [0, 1], with the truth dashed when given.
std::string eigenfunction_svg(const DiagonalizedBasis& db,
                              const Eigen::MatrixXd& U,
                              const std::vector<ScalarFunction>& truth = {});

/// Log-log plot of mean combined error against N for one component
/// (1-based) with the fitted line and a reference line of the expected slope.
std::string rate_svg(const RateReport& report, int component);

}  // namespace fpca
