#include "fpca/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fpca/parallel.hpp"

namespace fpca {

Eigen::MatrixXd ModelPoint::W() const {
  return U * lambda.asDiagonal() * U.transpose();
}

double ModelPoint::orthonormality_drift() const {
  const Eigen::MatrixXd gram = U.transpose() * U;
  return (gram - Eigen::MatrixXd::Identity(R(), R())).cwiseAbs().maxCoeff();
}

void ModelPoint::validate(double tol) const {
  if (U.cols() != lambda.size() || U.cols() == 0 || U.rows() < U.cols()) {
    throw std::invalid_argument("ModelPoint: inconsistent dimensions");
  }
  if (orthonormality_drift() > tol) {
    throw std::invalid_argument("ModelPoint: U is not orthonormal");
  }
  if (!(lambda.minCoeff() > 0.0)) {
    throw std::invalid_argument("ModelPoint: lambda must be positive");
  }
  if (!(sigma2 > 0.0)) {
    throw std::invalid_argument("ModelPoint: sigma2 must be positive");
  }
}

void ModelPoint::sort_components() {
  std::vector<int> order(R());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return lambda(a) > lambda(b) + 1e-10;
  });
  Eigen::MatrixXd U2(U.rows(), U.cols());
  Eigen::VectorXd l2(lambda.size());
  for (int r = 0; r < R(); ++r) {
    U2.col(r) = U.col(order[r]);
    l2(r) = lambda(order[r]);
  }
  U = std::move(U2);
  lambda = std::move(l2);
}

CurveDesign curve_design(const DiagonalizedBasis& db,
                         const std::vector<double>& times,
                         const std::vector<double>& values) {
  if (times.empty()) throw std::invalid_argument("curve_design: empty curve");
  if (times.size() != values.size()) {
    throw std::invalid_argument("curve_design: length mismatch");
  }
  CurveDesign cd;
  cd.M = static_cast<int>(times.size());
  cd.B.resize(cd.M, db.dimension());
  cd.y.resize(cd.M);
  for (int j = 0; j < cd.M; ++j) {
    cd.B.row(j) = eval_diag(db, times[j], 0).transpose();
    cd.y(j) = values[j];
  }
  cd.S = cd.y * cd.y.transpose();
  return cd;
}

std::vector<CurveDesign> make_designs(const DiagonalizedBasis& db,
                                      const SparseDataset& data) {
  std::vector<CurveDesign> out;
  out.reserve(data.curves.size());
  for (const auto& c : data.curves) {
    out.push_back(curve_design(db, c.times, c.values));
  }
  return out;
}

namespace {

Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& BU,
                           const Eigen::VectorXd& lambda, double sigma2) {
  Eigen::MatrixXd C = BU * lambda.asDiagonal() * BU.transpose();
  C.diagonal().array() += sigma2;
  return C;
}

void check_dims(const ModelPoint& mp, const CurveDesign& cd) {
  if (cd.B.cols() != mp.U.rows()) {
    throw std::invalid_argument("model: basis dimension mismatch");
  }
}

struct Partial {
  double loss = 0.0;
  Eigen::MatrixXd grad_U;
  Eigen::VectorXd grad_lambda;
  double grad_sigma2 = 0.0;
};

// Adds curve n's weighted loss and (optionally) its gradient contribution.
// The gradient with respect to C is G_C = −M⁻² Dφ′(C)[S − C].
void accumulate_curve(const SeedFunction& seed, const ModelPoint& mp,
                      const CurveDesign& cd, bool with_gradient,
                      bool use_fast_path, Partial& acc) {
  check_dims(mp, cd);
  const double weight = 1.0 / (static_cast<double>(cd.M) * cd.M);
  const Eigen::MatrixXd BU = cd.B * mp.U;
  const Eigen::MatrixXd C = cov_matrix(BU, mp.lambda, mp.sigma2);

  Eigen::MatrixXd G_C;
  if (use_fast_path && seed.kind() == SeedFunction::Kind::Frobenius) {
    // tr{−C² − 2C(S − C)} = ‖C‖²_F − 2 yᵀ C y
    acc.loss += weight * (C.squaredNorm() - 2.0 * cd.y.dot(C * cd.y));
    if (with_gradient) G_C = (-2.0 * weight) * (cd.S - C);
  } else {
    const SpdMatrix spd(C);
    const Eigen::VectorXd& g = spd.eigenvalues();
    const Eigen::MatrixXd& F = spd.eigenvectors();
    const Eigen::VectorXd z = F.transpose() * cd.y;
    double term = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double d = seed.dphi(g(i));
      term += -seed.phi(g(i)) + d * g(i) - d * z(i) * z(i);
    }
    acc.loss += weight * term;
    if (with_gradient) {
      Eigen::MatrixXd X = z * z.transpose();
      X.diagonal() -= g;
      X = loewner_matrix(seed, g).cwiseProduct(X);
      G_C = (-weight) * (F * X * F.transpose());
    }
  }
  if (!with_gradient) return;
  const Eigen::MatrixXd P = G_C * BU;
  acc.grad_U.noalias() += 2.0 * cd.B.transpose() * (P * mp.lambda.asDiagonal());
  acc.grad_lambda += BU.cwiseProduct(P).colwise().sum().transpose();
  acc.grad_sigma2 += G_C.trace();
}

constexpr std::size_t kBlock = 32;

Evaluation evaluate_impl(const SeedFunction& seed, const DiagonalizedBasis& db,
                         const ModelPoint& mp,
                         const std::vector<CurveDesign>& designs,
                         const Eigen::VectorXd& eta, bool with_gradient,
                         bool use_fast_path, unsigned workers) {
  if (designs.empty()) throw std::invalid_argument("loss: no curves");
  if (eta.size() != mp.R()) {
    throw std::invalid_argument("penalty weights must have one entry per component");
  }
  const int K = mp.K();
  const int R = mp.R();
  const std::size_t n_blocks = (designs.size() + kBlock - 1) / kBlock;
  std::vector<Partial> partials(n_blocks);
  parallel_for(n_blocks, workers, [&](std::size_t b) {
    Partial& p = partials[b];
    if (with_gradient) {
      p.grad_U = Eigen::MatrixXd::Zero(K, R);
      p.grad_lambda = Eigen::VectorXd::Zero(R);
    }
    const std::size_t end = std::min(designs.size(), (b + 1) * kBlock);
    for (std::size_t n = b * kBlock; n < end; ++n) {
      accumulate_curve(seed, mp, designs[n], with_gradient, use_fast_path, p);
    }
  });

  Evaluation ev;
  const double inv_n = 1.0 / static_cast<double>(designs.size());
  if (with_gradient) {
    ev.grad.U = Eigen::MatrixXd::Zero(K, R);
    ev.grad.lambda = Eigen::VectorXd::Zero(R);
  }
  for (const Partial& p : partials) {
    ev.loss += p.loss;
    if (with_gradient) {
      ev.grad.U += p.grad_U;
      ev.grad.lambda += p.grad_lambda;
      ev.grad.sigma2 += p.grad_sigma2;
    }
  }
  ev.loss *= inv_n;
  ev.penalty = penalty_value(db, mp, eta);
  ev.objective = ev.loss + ev.penalty;
  if (with_gradient) {
    ev.grad.U *= inv_n;
    ev.grad.lambda *= inv_n;
    ev.grad.sigma2 *= inv_n;
    ev.grad.U.noalias() +=
        2.0 * db.gamma().asDiagonal() * mp.U * eta.asDiagonal();
  }
  return ev;
}

}  // namespace

SpdMatrix model_cov(const ModelPoint& mp, const CurveDesign& cd) {
  check_dims(mp, cd);
  return SpdMatrix(cov_matrix(cd.B * mp.U, mp.lambda, mp.sigma2));
}

double penalty_value(const DiagonalizedBasis& db, const ModelPoint& mp,
                     const Eigen::VectorXd& eta) {
  if (eta.size() != mp.R()) {
    throw std::invalid_argument("penalty weights must have one entry per component");
  }
  if ((eta.array() < 0.0).any()) {
    throw std::invalid_argument("penalty weight must be nonnegative");
  }
  // Σ_r eta_r u_rᵀ Γ u_r
  const Eigen::VectorXd per_component =
      (db.gamma().asDiagonal() * mp.U.cwiseAbs2()).colwise().sum().transpose();
  return eta.dot(per_component);
}

double penalty_value(const DiagonalizedBasis& db, const ModelPoint& mp,
                     double eta) {
  return penalty_value(db, mp, Eigen::VectorXd::Constant(mp.R(), eta));
}

double loss(const SeedFunction& seed, const ModelPoint& mp,
            const std::vector<CurveDesign>& designs, unsigned workers) {
  if (designs.empty()) throw std::invalid_argument("loss: no curves");
  const std::size_t n_blocks = (designs.size() + kBlock - 1) / kBlock;
  std::vector<Partial> partials(n_blocks);
  parallel_for(n_blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(designs.size(), (b + 1) * kBlock);
    for (std::size_t n = b * kBlock; n < end; ++n) {
      accumulate_curve(seed, mp, designs[n], false, true, partials[b]);
    }
  });
  double total = 0.0;
  for (const Partial& p : partials) total += p.loss;
  return total / static_cast<double>(designs.size());
}

Objective::Objective(SeedFunction seed, const DiagonalizedBasis& db,
                     std::vector<CurveDesign> designs, Eigen::VectorXd eta,
                     unsigned workers)
    : seed_(std::move(seed)),
      db_(db),
      designs_(std::move(designs)),
      eta_(std::move(eta)),
      workers_(std::max(1u, workers)) {
  if ((eta_.array() < 0.0).any()) {
    throw std::invalid_argument("penalty weight must be nonnegative");
  }
}

Evaluation Objective::evaluate(const ModelPoint& mp, bool with_gradient) const {
  return evaluate_impl(seed_, db_, mp, designs_, eta_, with_gradient, true,
                       workers_);
}

CurvatureDiagonal Objective::curvature(const ModelPoint& mp) const {
  const int K = mp.K();
  const int R = mp.R();
  const std::size_t n_blocks = (designs_.size() + kBlock - 1) / kBlock;
  std::vector<CurvatureDiagonal> partials(n_blocks);
  parallel_for(n_blocks, workers_, [&](std::size_t b) {
    CurvatureDiagonal& p = partials[b];
    p.U = Eigen::MatrixXd::Zero(K, R);
    p.loglambda = Eigen::VectorXd::Zero(R);
    const std::size_t end = std::min(designs_.size(), (b + 1) * kBlock);
    for (std::size_t n = b * kBlock; n < end; ++n) {
      const CurveDesign& cd = designs_[n];
      check_dims(mp, cd);
      const Eigen::MatrixXd BU = cd.B * mp.U;
      const double weight = 1.0 / (static_cast<double>(cd.M) * cd.M);
      if (seed_.kind() == SeedFunction::Kind::Frobenius) {
        // Dφ′(C) = 2·identity: ‖∂C/∂U_jr‖² = λ²(2‖b_j‖²‖v‖² + 2(b_j·v)²).
        const Eigen::VectorXd col_sq = cd.B.colwise().squaredNorm().transpose();
        const Eigen::MatrixXd BtBU = cd.B.transpose() * BU;
        for (int r = 0; r < R; ++r) {
          const double l2 = mp.lambda(r) * mp.lambda(r);
          const double v2 = BU.col(r).squaredNorm();
          p.U.col(r) += (weight * 4.0 * l2) * (col_sq * v2 + BtBU.col(r).cwiseAbs2());
          p.loglambda(r) += weight * 2.0 * l2 * v2 * v2;
        }
        p.logsigma2 += weight * 2.0 * mp.sigma2 * mp.sigma2 * cd.M;
        continue;
      }
      // ⟨E, Dφ′(C)[E]⟩ = Σ L_ik (FᵀEF)_ik² with E = ∂C along one coordinate.
      const SpdMatrix C(cov_matrix(BU, mp.lambda, mp.sigma2));
      const Eigen::MatrixXd L = loewner_matrix(seed_, C.eigenvalues());
      const Eigen::MatrixXd FB = C.eigenvectors().transpose() * cd.B;  // M × K
      const Eigen::MatrixXd FV = C.eigenvectors().transpose() * BU;    // M × R
      for (int r = 0; r < R; ++r) {
        const double l2 = mp.lambda(r) * mp.lambda(r);
        const Eigen::VectorXd v = FV.col(r);
        for (int j = 0; j < K; ++j) {
          const Eigen::MatrixXd E = FB.col(j) * v.transpose() + v * FB.col(j).transpose();
          p.U(j, r) += weight * l2 * L.cwiseProduct(E.cwiseAbs2()).sum();
        }
        const Eigen::VectorXd v2 = v.cwiseAbs2();
        p.loglambda(r) += weight * l2 * v2.dot(L * v2);
      }
      p.logsigma2 += weight * mp.sigma2 * mp.sigma2 * L.trace();
    }
  });
  CurvatureDiagonal out{Eigen::MatrixXd::Zero(K, R), Eigen::VectorXd::Zero(R), 0.0};
  for (const CurvatureDiagonal& p : partials) {
    out.U += p.U;
    out.loglambda += p.loglambda;
    out.logsigma2 += p.logsigma2;
  }
  const double inv_n = 1.0 / static_cast<double>(designs_.size());
  out.U *= inv_n;
  out.loglambda *= inv_n;
  out.logsigma2 *= inv_n;
  for (int r = 0; r < R; ++r) out.U.col(r) += 2.0 * eta_(r) * db_.gamma();
  return out;
}

EuclideanGradient loss_grad(const SeedFunction& seed,
                            const DiagonalizedBasis& db, const ModelPoint& mp,
                            const std::vector<CurveDesign>& designs,
                            double eta) {
  return evaluate_impl(seed, db, mp, designs,
                       Eigen::VectorXd::Constant(mp.R(), eta), true, true, 1)
      .grad;
}

Evaluation evaluate_generic(const SeedFunction& seed,
                            const DiagonalizedBasis& db, const ModelPoint& mp,
                            const std::vector<CurveDesign>& designs,
                            const Eigen::VectorXd& eta) {
  return evaluate_impl(seed, db, mp, designs, eta, true, false, 1);
}

}  // namespace fpca
