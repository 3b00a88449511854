#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpca/manifold.hpp"
#include "fpca/model.hpp"

namespace fpca {

enum class FitMethod { GradientDescent, ConjugateGradient };
enum class FitStatus { Converged, MaxIters, LineSearchFailure };
enum class InitMethod { Moments, Random };

std::string to_string(FitMethod m);
std::string to_string(FitStatus s);
FitMethod fit_method_from_string(const std::string& s);

struct ArmijoParams {
  double initial_step = 1.0;
  double shrink = 0.5;         ///< in (0, 1)
  double sufficient = 1e-4;    ///< in (0, 0.5]
  int max_shrinks = 40;
  /// Backtrack to the minimizer of the quadratic through f(0), f′(0) and
  /// f(t), kept within [0.1 t, shrink · t]; otherwise multiply by shrink.
  bool interpolate = true;
};

/// Optional compact parameter box: tr(UᵀΓU) <= b0 and lambda_r, sigma2 in
/// [b1, b2].
struct ParameterBounds {
  double b0 = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;

  bool contains(const DiagonalizedBasis& db, const ModelPoint& mp) const;
};

struct FitConfig {
  FitMethod method = FitMethod::ConjugateGradient;
  int max_iters = 500;
  double grad_tol = 1e-6;  ///< relative to the initial gradient norm (floor 1e-12·max(1, |f₀|))
  ArmijoParams armijo;
  std::optional<ParameterBounds> bounds;
  RetractionKind retraction = RetractionKind::Exponential;
  InitMethod init = InitMethod::Moments;
  double sigma2_init = 1.0;
  std::uint64_t init_seed = 0;  ///< used by InitMethod::Random
  /// Scale search directions by the inverse diagonal Gauss–Newton curvature.
  bool precondition = true;
  /// Restart conjugate gradient when successive gradients lose orthogonality.
  bool powell_restart = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct FitResult {
  ModelPoint point;
  std::vector<double> loss_trace;       ///< objective at each iterate
  std::vector<double> grad_norm_trace;  ///< Riemannian gradient norm
  FitStatus status = FitStatus::MaxIters;
  int iterations = 0;
  bool used_fallback_init = false;
};

/// Initialization by pooled off-diagonal least squares followed by a rank-R
/// eigendecomposition.
struct InitResult {
  ModelPoint point;
  bool fallback = false;  ///< too few pairs; identity columns used instead
};

InitResult initialize(const DiagonalizedBasis& db, const SparseDataset& data,
                      int R, double sigma2_init);

/// Random orthonormal U (QR of a Gaussian matrix), lambda = 1.
ModelPoint random_point(int K, int R, double sigma2, std::uint64_t seed);

/// Minimizes the objective from `start`.
FitResult fit_from(const Objective& objective, const ModelPoint& start,
                   const FitConfig& config);

/// initialize + fit_from with a shared penalty weight eta.
FitResult fit(const SeedFunction& seed, const DiagonalizedBasis& db,
              const SparseDataset& data, int R, double eta,
              const FitConfig& config, unsigned workers = 1);

}  // namespace fpca
