#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <string_view>

namespace fpca {

/// Strictly convex seed function of a matrix Bregman divergence.
///
/// The three canonical seeds have matrix-monotone derivatives:
///   Frobenius    φ(x) = x²
///   LogDet       φ(x) = −log x
///   VonNeumann   φ(x) = x log x − x
/// A Custom seed carries user-supplied scalar evaluators for φ, φ′ and φ″.
class SeedFunction {
 public:
  enum class Kind { Frobenius, LogDet, VonNeumann, Custom };
  using Scalar = std::function<double(double)>;

  static SeedFunction frobenius() { return SeedFunction(Kind::Frobenius); }
  static SeedFunction logdet() { return SeedFunction(Kind::LogDet); }
  static SeedFunction von_neumann() { return SeedFunction(Kind::VonNeumann); }
  static SeedFunction custom(std::string name, Scalar phi, Scalar dphi,
                             Scalar d2phi);

  /// Parses "frobenius", "logdet" or "vonneumann" (case-insensitive).
  static SeedFunction from_name(std::string_view name);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  double phi(double x) const;
  double dphi(double x) const;
  double d2phi(double x) const;

 private:
  explicit SeedFunction(Kind kind);

  Kind kind_;
  std::string name_;
  Scalar phi_, dphi_, d2phi_;
};

/// Symmetric positive-definite matrix with its eigendecomposition
/// A = F diag(g) Fᵀ cached at construction.
class SpdMatrix {
 public:
  /// Throws std::invalid_argument if A is not square or not symmetric to
  /// 1e-12 relative, and std::domain_error if its smallest eigenvalue is not
  /// positive.
  explicit SpdMatrix(const Eigen::MatrixXd& A);

  int size() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }
  const Eigen::VectorXd& eigenvalues() const { return values_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd values_;
};

/// F diag(f(g)) Fᵀ. Throws std::domain_error if f is not finite at some
/// eigenvalue.
Eigen::MatrixXd apply_matrix_function(const std::function<double(double)>& f,
                                      const SpdMatrix& A);

/// First divided differences of φ′ on the spectrum g (the Loewner matrix).
/// Pairs with |gᵢ − gⱼ| < 1e-8·max(gᵢ, gⱼ) use φ″ at their midpoint.
Eigen::MatrixXd loewner_matrix(const SeedFunction& seed,
                               const Eigen::VectorXd& g);

/// Directional derivative Dφ′(A)[H] by the Daleckii–Krein rule.
Eigen::MatrixXd frechet_phi_prime(const SeedFunction& seed, const SpdMatrix& A,
                                  const Eigen::MatrixXd& H);

/// tr{φ(K) − φ(C) − φ′(C)(K − C)}, clamped at zero when the rounding
/// residue is negative. Throws ConsistencyError when the raw value is more
/// negative than rounding allows, std::invalid_argument on size mismatch.
double bregman(const SeedFunction& seed, const SpdMatrix& K,
               const SpdMatrix& C);

}  // namespace fpca
