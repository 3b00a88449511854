#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpca/basis.hpp"
#include "fpca/data.hpp"
#include "fpca/divergence.hpp"

namespace fpca {

/// Working-model parameters: C(u, v) = b(u)ᵀ U diag(lambda) Uᵀ b(v) plus
/// noise variance sigma2 on the diagonal.
struct ModelPoint {
  Eigen::MatrixXd U;       ///< K × R with orthonormal columns
  Eigen::VectorXd lambda;  ///< R positive eigenvalues
  double sigma2 = 1.0;

  int K() const { return static_cast<int>(U.rows()); }
  int R() const { return static_cast<int>(U.cols()); }

  /// Coefficient matrix W = U diag(lambda) Uᵀ.
  Eigen::MatrixXd W() const;

  /// max |UᵀU − I|.
  double orthonormality_drift() const;

  /// Throws std::invalid_argument when an invariant fails.
  void validate(double tol = 1e-8) const;

  /// Reorders components so lambda is nonincreasing; ties keep their
  /// original column order.
  void sort_components();
};

/// Design of one curve in the diagonalized basis.
struct CurveDesign {
  Eigen::MatrixXd B;  ///< M × K, rows b(u_j)ᵀ
  Eigen::VectorXd y;  ///< observed values
  Eigen::MatrixXd S;  ///< y yᵀ
  int M = 0;
};

/// Throws std::invalid_argument for an empty curve, length mismatch or a time
/// outside [0, 1].
CurveDesign curve_design(const DiagonalizedBasis& db,
                         const std::vector<double>& times,
                         const std::vector<double>& values);

std::vector<CurveDesign> make_designs(const DiagonalizedBasis& db,
                                      const SparseDataset& data);

/// Model covariance B U diag(lambda) Uᵀ Bᵀ + sigma2 I at the curve's times.
SpdMatrix model_cov(const ModelPoint& mp, const CurveDesign& cd);

/// Σ_r eta_r Σ_j gamma_j U(j, r)².
double penalty_value(const DiagonalizedBasis& db, const ModelPoint& mp,
                     const Eigen::VectorXd& eta);
double penalty_value(const DiagonalizedBasis& db, const ModelPoint& mp,
                     double eta);

/// (1/N) Σ_n M_n⁻² tr{−φ(C_n) − φ′(C_n)(S_n − C_n)}.
double loss(const SeedFunction& seed, const ModelPoint& mp,
            const std::vector<CurveDesign>& designs, unsigned workers = 1);

/// Ambient (Euclidean) gradient of loss + penalty.
struct EuclideanGradient {
  Eigen::MatrixXd U;
  Eigen::VectorXd lambda;
  double sigma2 = 0.0;
};

struct Evaluation {
  double loss = 0.0;
  double penalty = 0.0;
  double objective = 0.0;  ///< loss + penalty
  EuclideanGradient grad;  ///< empty unless requested
};

/// Diagonal Gauss–Newton curvature of loss + penalty in the coordinates
/// (U entries, log lambda, log sigma2): the Hessian of the loss in C is
/// replaced by its data-free part Dφ′(C).
struct CurvatureDiagonal {
  Eigen::MatrixXd U;
  Eigen::VectorXd loglambda;
  double logsigma2 = 0.0;
};

/// Penalized objective bound to a basis, a dataset and penalty weights.
///
/// Per-curve terms are accumulated in fixed blocks and reduced in block
/// order, so results do not depend on the worker count.
class Objective {
 public:
  Objective(SeedFunction seed, const DiagonalizedBasis& db,
            std::vector<CurveDesign> designs, Eigen::VectorXd eta,
            unsigned workers = 1);

  const SeedFunction& seed() const { return seed_; }
  const DiagonalizedBasis& basis() const { return db_; }
  const std::vector<CurveDesign>& designs() const { return designs_; }
  const Eigen::VectorXd& eta() const { return eta_; }

  Evaluation evaluate(const ModelPoint& mp, bool with_gradient) const;
  double value(const ModelPoint& mp) const {
    return evaluate(mp, false).objective;
  }
  CurvatureDiagonal curvature(const ModelPoint& mp) const;

 private:
  SeedFunction seed_;
  DiagonalizedBasis db_;
  std::vector<CurveDesign> designs_;
  Eigen::VectorXd eta_;
  unsigned workers_;
};

/// Euclidean gradient of loss + eta-penalty (single shared eta).
EuclideanGradient loss_grad(const SeedFunction& seed,
                            const DiagonalizedBasis& db, const ModelPoint& mp,
                            const std::vector<CurveDesign>& designs,
                            double eta);

/// Per-curve contributions computed through the generic eigendecomposition
/// route even for the Frobenius seed; used to cross-check the fast path.
Evaluation evaluate_generic(const SeedFunction& seed,
                            const DiagonalizedBasis& db, const ModelPoint& mp,
                            const std::vector<CurveDesign>& designs,
                            const Eigen::VectorXd& eta);

}  // namespace fpca
