#include "fpca/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fpca/errors.hpp"
#include "fpca/quadrature.hpp"

namespace fpca {

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> out;
  out.reserve(interior_count + 2);
  for (double t : knots) {
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  return out;
}

KnotVector make_knots(int K, int m) {
  if (m < 1) throw std::invalid_argument("make_knots: degree must be >= 1");
  if (K < m + 1) {
    throw std::invalid_argument("make_knots: K=" + std::to_string(K) +
                                " is below m+1=" + std::to_string(m + 1));
  }
  KnotVector kv;
  kv.degree = m;
  kv.interior_count = K - m - 1;
  kv.knots.assign(m + 1, 0.0);
  const int pieces = kv.interior_count + 1;
  for (int j = 1; j <= kv.interior_count; ++j) {
    kv.knots.push_back(static_cast<double>(j) / pieces);
  }
  kv.knots.insert(kv.knots.end(), m + 1, 1.0);
  return kv;
}

int knot_span(const KnotVector& kv, double u) {
  const int K = kv.dimension();
  const int m = kv.degree;
  if (u >= kv.knots[K]) return K - 1;
  const auto it = std::upper_bound(kv.knots.begin() + m,
                                   kv.knots.begin() + K + 1, u);
  return static_cast<int>(it - kv.knots.begin()) - 1;
}

Eigen::VectorXd eval_raw(const KnotVector& kv, double u, int deriv) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw std::invalid_argument("eval_raw: u=" + std::to_string(u) +
                                " outside [0, 1]");
  }
  const int m = kv.degree;
  if (deriv < 0 || deriv > m) {
    throw std::invalid_argument("eval_raw: derivative order out of range");
  }
  const int K = kv.dimension();
  const auto& t = kv.knots;
  const int span = knot_span(kv, u);

  // Nonzero basis values in the upper triangle of ndu, knot differences in
  // the lower triangle.
  Eigen::MatrixXd ndu(m + 1, m + 1);
  Eigen::VectorXd left(m + 1), right(m + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= m; ++j) {
    left(j) = u - t[span + 1 - j];
    right(j) = t[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right(r + 1) + left(j - r);
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right(r + 1) * temp;
      saved = left(j - r) * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::VectorXd local(m + 1);
  if (deriv == 0) {
    for (int j = 0; j <= m; ++j) local(j) = ndu(j, m);
  } else {
    Eigen::MatrixXd a(2, m + 1);
    for (int r = 0; r <= m; ++r) {
      int s1 = 0;
      int s2 = 1;
      a(0, 0) = 1.0;
      double d = 0.0;
      for (int k = 1; k <= deriv; ++k) {
        d = 0.0;
        const int rk = r - k;
        const int pk = m - k;
        if (r >= k) {
          a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
          d = a(s2, 0) * ndu(rk, pk);
        }
        const int j1 = (rk >= -1) ? 1 : -rk;
        const int j2 = (r - 1 <= pk) ? k - 1 : m - r;
        for (int j = j1; j <= j2; ++j) {
          a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
          d += a(s2, j) * ndu(rk + j, pk);
        }
        if (r <= pk) {
          a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
          d += a(s2, k) * ndu(r, pk);
        }
        std::swap(s1, s2);
      }
      local(r) = d;
    }
    double factor = m;
    for (int k = 1; k < deriv; ++k) factor *= (m - k);
    local *= factor;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(K);
  out.segment(span - m, m + 1) = local;
  return out;
}

RawSplineBasis gram_and_rough(const KnotVector& kv, int q) {
  if (q < 1 || q > kv.degree) {
    throw std::invalid_argument("gram_and_rough: penalty order q=" +
                                std::to_string(q) + " must satisfy 1 <= q <= m=" +
                                std::to_string(kv.degree));
  }
  const int K = kv.dimension();
  const int m = kv.degree;
  // m+1 nodes integrate degree 2m+1 exactly; integrands have degree <= 2m.
  const GaussRule rule = composite_gauss(kv.breakpoints(), (2 * m + 2 + 1) / 2);

  RawSplineBasis raw;
  raw.knots = kv;
  raw.q = q;
  raw.gram = Eigen::MatrixXd::Zero(K, K);
  raw.rough = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Eigen::VectorXd b = eval_raw(kv, rule.nodes[i], 0);
    const Eigen::VectorXd bq = eval_raw(kv, rule.nodes[i], q);
    raw.gram.noalias() += rule.weights[i] * b * b.transpose();
    raw.rough.noalias() += rule.weights[i] * bq * bq.transpose();
  }
  // Rank-one updates are symmetric up to rounding; make it exact.
  raw.gram = 0.5 * (raw.gram + raw.gram.transpose()).eval();
  raw.rough = 0.5 * (raw.rough + raw.rough.transpose()).eval();
  return raw;
}

DiagonalizedBasis::DiagonalizedBasis(KnotVector knots, int q,
                                     Eigen::MatrixXd transform,
                                     Eigen::VectorXd gamma,
                                     Eigen::MatrixXd raw_gram)
    : knots_(std::move(knots)),
      q_(q),
      transform_(std::move(transform)),
      gamma_(std::move(gamma)),
      raw_gram_(std::move(raw_gram)) {}

Eigen::VectorXd DiagonalizedBasis::from_raw(
    const Eigen::VectorXd& raw_coef) const {
  // b = Tᵀ b_raw and Tᵀ N T = I, so T⁻¹ = Tᵀ N.
  return transform_.transpose() * (raw_gram_ * raw_coef);
}

namespace {

// Raw B-spline coefficients of the monomials 1, u, ..., u^{q-1}, obtained by
// collocation at the Greville abscissae (exact since degree < q <= m).
Eigen::MatrixXd polynomial_coefficients(const KnotVector& kv, int q) {
  const int K = kv.dimension();
  const int m = kv.degree;
  Eigen::MatrixXd colloc(K, K);
  Eigen::VectorXd greville(K);
  for (int i = 0; i < K; ++i) {
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += kv.knots[i + j];
    greville(i) = s / m;
    colloc.row(i) = eval_raw(kv, greville(i), 0).transpose();
  }
  Eigen::MatrixXd rhs(K, q);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < q; ++k) rhs(i, k) = std::pow(greville(i), k);
  }
  return colloc.partialPivLu().solve(rhs);
}

}  // namespace

DiagonalizedBasis diagonalize(const RawSplineBasis& raw) {
  const int K = raw.knots.dimension();
  const int q = raw.q;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(raw.gram);
  if (gram_eig.info() != Eigen::Success) {
    throw ConstructionError("diagonalize: Gram eigendecomposition failed");
  }
  const Eigen::VectorXd& ev = gram_eig.eigenvalues();
  if (!(ev(0) > 0.0) || ev(K - 1) / ev(0) > 1e12) {
    throw ConstructionError("diagonalize: Gram matrix is numerically singular");
  }
  const Eigen::MatrixXd& V = gram_eig.eigenvectors();
  const Eigen::MatrixXd inv_sqrt =
      V * ev.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  const Eigen::MatrixXd sqrt_gram =
      V * ev.cwiseSqrt().asDiagonal() * V.transpose();
  const Eigen::MatrixXd whitened = inv_sqrt * raw.rough * inv_sqrt;

  // Orthonormal basis of the whitened null space (polynomials of degree < q)
  // and of its complement.
  const Eigen::MatrixXd null_raw = polynomial_coefficients(raw.knots, q);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(sqrt_gram * null_raw);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd null_part = Q.leftCols(q);
  const Eigen::MatrixXd complement = Q.rightCols(K - q);

  Eigen::MatrixXd rotation(K, K);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(K);
  rotation.leftCols(q) = null_part;
  if (K > q) {
    Eigen::MatrixXd reduced = complement.transpose() * whitened * complement;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rough_eig(reduced);
    if (rough_eig.info() != Eigen::Success) {
      throw ConstructionError("diagonalize: penalty eigendecomposition failed");
    }
    if (!(rough_eig.eigenvalues()(0) > 0.0)) {
      throw ConstructionError(
          "diagonalize: penalty is not positive off its null space");
    }
    rotation.rightCols(K - q) = complement * rough_eig.eigenvectors();
    gamma.tail(K - q) = rough_eig.eigenvalues();
  }
  Eigen::MatrixXd transform = inv_sqrt * rotation;
  // Sign convention: largest-magnitude coefficient of each column positive.
  for (int j = 0; j < K; ++j) {
    Eigen::Index arg = 0;
    transform.col(j).cwiseAbs().maxCoeff(&arg);
    if (transform(arg, j) < 0.0) transform.col(j) *= -1.0;
  }
  return DiagonalizedBasis(raw.knots, q, std::move(transform),
                           std::move(gamma), raw.gram);
}

DiagonalizedBasis make_basis(int K, int m, int q) {
  return diagonalize(gram_and_rough(make_knots(K, m), q));
}

Eigen::VectorXd eval_diag(const DiagonalizedBasis& db, double u, int deriv) {
  return db.transform().transpose() * eval_raw(db.knots(), u, deriv);
}

double eval_spline(const DiagonalizedBasis& db, const Eigen::VectorXd& coef,
                   double u, int deriv) {
  return eval_diag(db, u, deriv).dot(coef);
}

}  // namespace fpca
