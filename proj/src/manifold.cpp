#include "fpca/manifold.hpp"

#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace fpca {

TangentVector TangentVector::zero(int K, int R) {
  return {Eigen::MatrixXd::Zero(K, R), Eigen::VectorXd::Zero(R), 0.0};
}

TangentVector& TangentVector::operator+=(const TangentVector& o) {
  du += o.du;
  dloglambda += o.dloglambda;
  dlogsigma2 += o.dlogsigma2;
  return *this;
}

TangentVector& TangentVector::operator*=(double s) {
  du *= s;
  dloglambda *= s;
  dlogsigma2 *= s;
  return *this;
}

double inner(const TangentVector& a, const TangentVector& b) {
  return a.du.cwiseProduct(b.du).sum() + a.dloglambda.dot(b.dloglambda) +
         a.dlogsigma2 * b.dlogsigma2;
}

double norm(const TangentVector& v) { return std::sqrt(inner(v, v)); }

Eigen::MatrixXd project_tangent(const Eigen::MatrixXd& U,
                                const Eigen::MatrixXd& G) {
  const Eigen::MatrixXd UtG = U.transpose() * G;
  return G - U * (0.5 * (UtG + UtG.transpose()));
}

Eigen::MatrixXd exp_stiefel(const Eigen::MatrixXd& U, const Eigen::MatrixXd& du,
                            double t) {
  const Eigen::Index K = U.rows();
  const Eigen::Index R = U.cols();
  if (du.rows() != K || du.cols() != R) {
    throw std::invalid_argument("exp_stiefel: dimension mismatch");
  }
  if (t == 0.0) return U;
  Eigen::MatrixXd G = U.transpose() * du;
  G = 0.5 * (G - G.transpose()).eval();
  const Eigen::MatrixXd H = du - U * G;

  const double h_scale = H.norm();
  if (h_scale <= 1e-300 || K == R) {
    return U * (t * G).exp();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(H);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(K, R);
  const Eigen::MatrixXd Rf =
      qr.matrixQR().topRows(R).triangularView<Eigen::Upper>();

  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * R, 2 * R);
  S.topLeftCorner(R, R) = G;
  S.topRightCorner(R, R) = -Rf.transpose();
  S.bottomLeftCorner(R, R) = Rf;
  const Eigen::MatrixXd E = (t * S).exp();
  return U * E.topLeftCorner(R, R) + Q * E.bottomLeftCorner(R, R);
}

Eigen::MatrixXd reorthonormalize(const Eigen::MatrixXd& U) {
  const Eigen::Index K = U.rows();
  const Eigen::Index R = U.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(U);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(K, R);
  for (Eigen::Index r = 0; r < R; ++r) {
    if (qr.matrixQR()(r, r) < 0.0) Q.col(r) *= -1.0;
  }
  return Q;
}

Eigen::MatrixXd retract_qr(const Eigen::MatrixXd& U, const Eigen::MatrixXd& du,
                           double t) {
  if (t == 0.0) return U;
  return reorthonormalize(U + t * du);
}

ModelPoint move_point(const ModelPoint& mp, const TangentVector& tv, double t,
                      RetractionKind kind) {
  ModelPoint out;
  out.U = kind == RetractionKind::Exponential ? exp_stiefel(mp.U, tv.du, t)
                                              : retract_qr(mp.U, tv.du, t);
  out.lambda = mp.lambda.array() * (t * tv.dloglambda.array()).exp();
  out.sigma2 = mp.sigma2 * std::exp(t * tv.dlogsigma2);
  return out;
}

TangentVector riemannian_grad(const ModelPoint& mp,
                              const EuclideanGradient& grad) {
  TangentVector tv;
  tv.du = project_tangent(mp.U, grad.U);
  tv.dloglambda = mp.lambda.cwiseProduct(grad.lambda);
  tv.dlogsigma2 = mp.sigma2 * grad.sigma2;
  return tv;
}

TangentVector transport(const ModelPoint& to, const TangentVector& v) {
  TangentVector out = v;
  out.du = project_tangent(to.U, v.du);
  return out;
}

}  // namespace fpca
