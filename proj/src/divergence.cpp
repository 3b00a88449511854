#include "fpca/divergence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "fpca/errors.hpp"

namespace fpca {

namespace {

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) {
    throw std::domain_error(std::string(what) +
                            ": argument must be positive, got " +
                            std::to_string(x));
  }
}

}  // namespace

SeedFunction::SeedFunction(Kind kind) : kind_(kind) {
  switch (kind) {
    case Kind::Frobenius:
      name_ = "frobenius";
      break;
    case Kind::LogDet:
      name_ = "logdet";
      break;
    case Kind::VonNeumann:
      name_ = "vonneumann";
      break;
    case Kind::Custom:
      name_ = "custom";
      break;
  }
}

SeedFunction SeedFunction::custom(std::string name, Scalar phi, Scalar dphi,
                                  Scalar d2phi) {
  if (!phi || !dphi || !d2phi) {
    throw std::invalid_argument("custom seed requires phi, dphi and d2phi");
  }
  SeedFunction s(Kind::Custom);
  s.name_ = std::move(name);
  s.phi_ = std::move(phi);
  s.dphi_ = std::move(dphi);
  s.d2phi_ = std::move(d2phi);
  return s;
}

SeedFunction SeedFunction::from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "frobenius") return frobenius();
  if (lower == "logdet") return logdet();
  if (lower == "vonneumann" || lower == "von-neumann") return von_neumann();
  throw std::invalid_argument("unknown divergence '" + std::string(name) +
                              "' (expected frobenius, logdet or vonneumann)");
}

double SeedFunction::phi(double x) const {
  switch (kind_) {
    case Kind::Frobenius:
      return x * x;
    case Kind::LogDet:
      require_positive(x, "logdet phi");
      return -std::log(x);
    case Kind::VonNeumann:
      require_positive(x, "vonneumann phi");
      return x * std::log(x) - x;
    case Kind::Custom:
      return phi_(x);
  }
  return 0.0;
}

double SeedFunction::dphi(double x) const {
  switch (kind_) {
    case Kind::Frobenius:
      return 2.0 * x;
    case Kind::LogDet:
      require_positive(x, "logdet dphi");
      return -1.0 / x;
    case Kind::VonNeumann:
      require_positive(x, "vonneumann dphi");
      return std::log(x);
    case Kind::Custom:
      return dphi_(x);
  }
  return 0.0;
}

double SeedFunction::d2phi(double x) const {
  switch (kind_) {
    case Kind::Frobenius:
      return 2.0;
    case Kind::LogDet:
      require_positive(x, "logdet d2phi");
      return 1.0 / (x * x);
    case Kind::VonNeumann:
      require_positive(x, "vonneumann d2phi");
      return 1.0 / x;
    case Kind::Custom:
      return d2phi_(x);
  }
  return 0.0;
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& A) : matrix_(A) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw std::invalid_argument("SpdMatrix: matrix must be square and nonempty");
  }
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
  }
  matrix_ = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_);
  if (eig.info() != Eigen::Success) {
    throw std::domain_error("SpdMatrix: eigendecomposition failed");
  }
  values_ = eig.eigenvalues();
  vectors_ = eig.eigenvectors();
  if (!(values_(0) > 0.0)) {
    throw std::domain_error("SpdMatrix: matrix is not positive definite");
  }
}

Eigen::MatrixXd apply_matrix_function(const std::function<double(double)>& f,
                                      const SpdMatrix& A) {
  const Eigen::VectorXd& g = A.eigenvalues();
  Eigen::VectorXd fg(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    fg(i) = f(g(i));
    if (!std::isfinite(fg(i))) {
      throw std::domain_error("apply_matrix_function: f undefined at eigenvalue " +
                              std::to_string(g(i)));
    }
  }
  const Eigen::MatrixXd& F = A.eigenvectors();
  return F * fg.asDiagonal() * F.transpose();
}

Eigen::MatrixXd loewner_matrix(const SeedFunction& seed,
                               const Eigen::VectorXd& g) {
  const Eigen::Index n = g.size();
  Eigen::VectorXd dg(n);
  for (Eigen::Index i = 0; i < n; ++i) dg(i) = seed.dphi(g(i));
  Eigen::MatrixXd L(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    L(i, i) = seed.d2phi(g(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      const double gap = g(i) - g(j);
      const double v =
          std::abs(gap) < 1e-8 * std::max(std::abs(g(i)), std::abs(g(j)))
              ? seed.d2phi(0.5 * (g(i) + g(j)))
              : (dg(i) - dg(j)) / gap;
      L(i, j) = v;
      L(j, i) = v;
    }
  }
  return L;
}

Eigen::MatrixXd frechet_phi_prime(const SeedFunction& seed, const SpdMatrix& A,
                                  const Eigen::MatrixXd& H) {
  if (H.rows() != A.size() || H.cols() != A.size()) {
    throw std::invalid_argument("frechet_phi_prime: dimension mismatch");
  }
  const Eigen::MatrixXd& F = A.eigenvectors();
  const Eigen::MatrixXd rotated = F.transpose() * H * F;
  const Eigen::MatrixXd scaled =
      loewner_matrix(seed, A.eigenvalues()).cwiseProduct(rotated);
  return F * scaled * F.transpose();
}

double bregman(const SeedFunction& seed, const SpdMatrix& K,
               const SpdMatrix& C) {
  if (K.size() != C.size()) {
    throw std::invalid_argument("bregman: dimension mismatch");
  }
  double tr_phi_k = 0.0;
  for (Eigen::Index i = 0; i < K.eigenvalues().size(); ++i) {
    tr_phi_k += seed.phi(K.eigenvalues()(i));
  }
  double tr_phi_c = 0.0;
  for (Eigen::Index i = 0; i < C.eigenvalues().size(); ++i) {
    tr_phi_c += seed.phi(C.eigenvalues()(i));
  }
  const Eigen::MatrixXd dphi_c =
      apply_matrix_function([&](double x) { return seed.dphi(x); }, C);
  const double cross =
      (dphi_c.cwiseProduct(K.matrix() - C.matrix())).sum();
  const double value = tr_phi_k - tr_phi_c - cross;
  const double scale =
      std::max({1.0, std::abs(tr_phi_k), std::abs(tr_phi_c), std::abs(cross)});
  if (value < -1e-10 * scale) {
    throw ConsistencyError("bregman: divergence is negative beyond rounding (" +
                           std::to_string(value) + ")");
  }
  return std::max(value, 0.0);
}

}  // namespace fpca
