#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpca/model.hpp"

namespace fpca {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Applied to every analytic gradient before it is compared with finite
/// differences. Lets a test fixture plant a gradient bug.
using GradientHook = std::function<void(EuclideanGradient&)>;

struct CheckOptions {
  std::uint64_t seed = 1;
  GradientHook gradient_hook;
};

/// Fast invariant suite: basis, divergence, manifold, gradient and optimizer
/// properties on small random instances.
std::vector<CheckResult> run_checks(const CheckOptions& options = {});

/// Largest relative error, over the U, lambda and sigma2 blocks, between the
/// analytic gradient of loss + eta-penalty and central differences.
double gradient_check_error(const SeedFunction& seed,
                            const DiagonalizedBasis& db, const ModelPoint& mp,
                            const std::vector<CurveDesign>& designs, double eta,
                            const GradientHook& hook = {});

}  // namespace fpca
