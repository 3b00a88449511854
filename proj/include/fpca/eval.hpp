#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpca/basis.hpp"
#include "fpca/model.hpp"
#include "fpca/quadrature.hpp"
#include "fpca/simulate.hpp"
#include "fpca/stats.hpp"

namespace fpca {

/// V(f) = ‖coef‖² and J(f) = Σ gamma_j coef_j² for f = b(·)ᵀ coef.
struct QuadraticForms {
  double V = 0.0;
  double J = 0.0;
};

QuadraticForms v_and_j(const DiagonalizedBasis& db, const Eigen::VectorXd& coef);

/// {‖A‖²_F + eta · tr(Aᵀ diag(gamma) A)}^{1/2}.
double norm_eta(const DiagonalizedBasis& db, const Eigen::MatrixXd& A,
                double eta);

/// Quadrature used for L2 integrals against non-spline functions: 64 Gauss
/// points on each knot interval, further split at `extra_breaks`.
GaussRule l2_rule(const DiagonalizedBasis& db,
                  const std::vector<double>& extra_breaks = {});

struct ComponentError {
  int truth_index = 0;  ///< matched truth component (0-based)
  int sign = 1;
  double l2_sq_error = 0.0;  ///< ‖ψ̂ − ψ₀‖²
  double J_value = 0.0;      ///< J(ψ̂)
  double eta_J = 0.0;        ///< eta · J(ψ̂)
  double combined = 0.0;     ///< l2_sq_error + eta_J
};

struct AlignedError {
  std::vector<ComponentError> components;  ///< one per estimated column
};

/// Matches estimated components (columns of `coef`) to truth functions
/// greedily by descending |⟨ψ̂_r, ψ₀s⟩|, each truth used once, flips signs to
/// make matched inner products nonnegative, and reports per-component errors.
AlignedError align(const DiagonalizedBasis& db, const Eigen::MatrixXd& coef,
                   const std::vector<ScalarFunction>& truth, double eta,
                   const std::vector<double>& extra_breaks = {});

/// (1/N) Σ_n M_n⁻² ‖B_n (W1 − W2) B_nᵀ‖²_F.
double empirical_norm_sq(const std::vector<CurveDesign>& designs,
                         const Eigen::MatrixXd& W1, const Eigen::MatrixXd& W2);

/// L2 projection coefficients of f onto the diagonalized basis.
Eigen::VectorXd project_function(const DiagonalizedBasis& db,
                                 const ScalarFunction& f,
                                 const std::vector<double>& extra_breaks = {});

/// ‖f − Pf‖ for the L2 projection P onto the spline space.
double best_approx_error(const DiagonalizedBasis& db, const ScalarFunction& f,
                         const std::vector<double>& extra_breaks = {});

struct ApproxDecay {
  std::vector<int> K;
  std::vector<double> error;  ///< ‖f − Pf‖ for each K
  SlopeFit fit;               ///< least squares of log error on log K
};

/// Best-approximation error of f over a grid of spline dimensions and the
/// fitted decay slope.
ApproxDecay spline_approx_error(const std::vector<int>& K_grid, int m, int q,
                                const ScalarFunction& f,
                                const std::vector<double>& extra_breaks = {});

}  // namespace fpca
