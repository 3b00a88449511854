#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fpca {

/// Clamped knot sequence on [0, 1] with equally spaced interior knots.
struct KnotVector {
  int degree = 3;          ///< spline degree m
  int interior_count = 0;  ///< number of interior knots
  std::vector<double> knots;

  /// Basis dimension K = interior_count + m + 1.
  int dimension() const { return interior_count + degree + 1; }

  /// Distinct breakpoints 0 = t_0 < ... < t_{interior_count+1} = 1.
  std::vector<double> breakpoints() const;
};

/// Knot vector of a degree-m spline space of dimension K.
/// Throws std::invalid_argument when K < m + 1 or m < 1.
KnotVector make_knots(int K, int m);

/// B-spline basis with its Gram matrix and order-q roughness matrix.
struct RawSplineBasis {
  KnotVector knots;
  int q = 2;
  Eigen::MatrixXd gram;   ///< ∫ b_i b_j
  Eigen::MatrixXd rough;  ///< ∫ b_i^(q) b_j^(q)
};

/// Index s with knots[s] <= u < knots[s+1] (the last nonempty span for
/// u = 1). The B-splines nonzero at u are s-m, ..., s.
int knot_span(const KnotVector& knots, double u);

/// Values of the deriv-th derivative of every B-spline at u (length K).
/// Throws std::invalid_argument for u outside [0, 1] or deriv > m.
Eigen::VectorXd eval_raw(const KnotVector& knots, double u, int deriv = 0);

/// Assembles Gram and roughness matrices by per-interval Gauss–Legendre
/// quadrature that is exact for the piecewise-polynomial integrands.
/// Throws std::invalid_argument unless 1 <= q <= m.
RawSplineBasis gram_and_rough(const KnotVector& knots, int q);

/// Spline basis rotated so that ∫ b bᵀ = I and ∫ b^(q) b^(q)ᵀ = diag(gamma).
///
/// Coefficients in this basis relate to raw B-spline coefficients through
/// `transform`: b(u) = transformᵀ · b_raw(u). gamma is sorted ascending; its
/// first q entries are exactly zero (the polynomials of degree < q).
class DiagonalizedBasis {
 public:
  DiagonalizedBasis() = default;
  DiagonalizedBasis(KnotVector knots, int q, Eigen::MatrixXd transform,
                    Eigen::VectorXd gamma, Eigen::MatrixXd raw_gram);

  int dimension() const { return knots_.dimension(); }
  int degree() const { return knots_.degree; }
  int penalty_order() const { return q_; }
  const KnotVector& knots() const { return knots_; }
  const Eigen::MatrixXd& transform() const { return transform_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }

  /// Gram matrix of the underlying raw B-splines.
  const Eigen::MatrixXd& raw_gram() const { return raw_gram_; }

  /// Maps raw B-spline coefficients to coefficients in this basis.
  Eigen::VectorXd from_raw(const Eigen::VectorXd& raw_coef) const;

 private:
  KnotVector knots_;
  int q_ = 2;
  Eigen::MatrixXd transform_;
  Eigen::VectorXd gamma_;
  Eigen::MatrixXd raw_gram_;
};

/// Builds the diagonalized basis from a raw basis.
///
/// The Gram matrix is whitened by its symmetric inverse square root and the
/// whitened roughness matrix is eigendecomposed. The polynomial null space
/// of the roughness matrix is split off explicitly so that exactly q
/// eigenvalues are zero. Throws ConstructionError if the Gram matrix has
/// condition number above 1e12.
DiagonalizedBasis diagonalize(const RawSplineBasis& raw);

/// Convenience: make_knots + gram_and_rough + diagonalize.
DiagonalizedBasis make_basis(int K, int m = 3, int q = 2);

/// Values of the deriv-th derivative of the diagonalized basis at u.
Eigen::VectorXd eval_diag(const DiagonalizedBasis& db, double u,
                          int deriv = 0);

/// Value of the spline with the given diagonalized-basis coefficients.
double eval_spline(const DiagonalizedBasis& db, const Eigen::VectorXd& coef,
                   double u, int deriv = 0);

}  // namespace fpca
