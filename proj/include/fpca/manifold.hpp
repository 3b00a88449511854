#pragma once

#include <Eigen/Dense>

#include "fpca/model.hpp"

namespace fpca {

/// Tangent vector of St(R, K) × D₊ × ℝ₊ at a ModelPoint. The positive
/// factors are handled in log coordinates.
struct TangentVector {
  Eigen::MatrixXd du;             ///< K × R, Uᵀdu skew-symmetric
  Eigen::VectorXd dloglambda;     ///< R
  double dlogsigma2 = 0.0;

  static TangentVector zero(int K, int R);

  TangentVector& operator+=(const TangentVector& o);
  TangentVector& operator*=(double s);
  friend TangentVector operator*(double s, TangentVector v) { return v *= s; }
  friend TangentVector operator+(TangentVector a, const TangentVector& b) {
    return a += b;
  }
  TangentVector operator-() const { return -1.0 * *this; }
};

/// Product metric: Frobenius on du, Euclidean on the log coordinates.
double inner(const TangentVector& a, const TangentVector& b);
double norm(const TangentVector& v);

enum class RetractionKind { Exponential, QR };

/// G − U (UᵀG + GᵀU)/2.
Eigen::MatrixXd project_tangent(const Eigen::MatrixXd& U,
                                const Eigen::MatrixXd& G);

/// Stiefel geodesic through U with initial velocity du, evaluated at t.
Eigen::MatrixXd exp_stiefel(const Eigen::MatrixXd& U, const Eigen::MatrixXd& du,
                            double t);

/// Q factor of U + t·du with a positive diagonal of R.
Eigen::MatrixXd retract_qr(const Eigen::MatrixXd& U, const Eigen::MatrixXd& du,
                           double t);

/// Q factor of U with a positive diagonal of R; repairs orthonormality drift.
Eigen::MatrixXd reorthonormalize(const Eigen::MatrixXd& U);

/// Moves every factor of mp along tv by step t.
ModelPoint move_point(const ModelPoint& mp, const TangentVector& tv, double t,
                      RetractionKind kind = RetractionKind::Exponential);

/// Riemannian gradient in the product metric from ambient gradients.
TangentVector riemannian_grad(const ModelPoint& mp,
                              const EuclideanGradient& grad);

/// Projection of v onto the tangent space at `to`.
TangentVector transport(const ModelPoint& to, const TangentVector& v);

}  // namespace fpca
