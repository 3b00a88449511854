#include "fpca/check.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "fpca/manifold.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/quadrature.hpp"
#include "fpca/simulate.hpp"

namespace fpca {

namespace {

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

CheckResult bound_check(std::string name, double value, double limit) {
  return {std::move(name), value < limit,
          "max error " + sci(value) + " (limit " + sci(limit) + ")"};
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = normal(rng);
  Eigen::MatrixXd S = A * A.transpose() / n;
  S.diagonal().array() += 0.5;
  return 0.5 * (S + S.transpose());
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = normal(rng);
  return A;
}

std::vector<CheckResult> basis_checks() {
  std::vector<CheckResult> out;
  const DiagonalizedBasis db = make_basis(12, 3, 2);
  const GaussRule rule = composite_gauss(db.knots().breakpoints(), 8);
  const int K = db.dimension();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXd rough = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Eigen::VectorXd b = eval_diag(db, rule.nodes[i], 0);
    const Eigen::VectorXd b2 = eval_diag(db, rule.nodes[i], 2);
    gram.noalias() += rule.weights[i] * b * b.transpose();
    rough.noalias() += rule.weights[i] * b2 * b2.transpose();
  }
  const double gram_err =
      (gram - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd target = db.gamma().asDiagonal();
  const double rough_err = (rough - target).cwiseAbs().maxCoeff() /
                           std::max(1.0, db.gamma().maxCoeff());
  out.push_back(bound_check("basis.gram_identity", gram_err, 1e-8));
  out.push_back(bound_check("basis.penalty_diagonal", rough_err, 1e-8));
  int zeros = 0;
  for (Eigen::Index j = 0; j < db.gamma().size(); ++j) zeros += db.gamma()(j) < 1e-8;
  out.push_back({"basis.null_space_dimension", zeros == db.penalty_order(),
                 std::to_string(zeros) + " zero penalty eigenvalues (expected " +
                     std::to_string(db.penalty_order()) + ")"});
  return out;
}

std::vector<CheckResult> divergence_checks(std::mt19937_64& rng) {
  std::vector<CheckResult> out;
  const SeedFunction seeds[] = {SeedFunction::frobenius(), SeedFunction::logdet(),
                                SeedFunction::von_neumann()};
  bool nonneg = true;
  double self = 0.0;
  double frob = 0.0;
  double frechet = 0.0;
  for (const SeedFunction& s : seeds) {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + trial % 5;
      const SpdMatrix A(random_spd(rng, n)), B(random_spd(rng, n));
      if (bregman(s, A, B) < 0.0) nonneg = false;
      self = std::max(self, bregman(s, A, A));
      if (s.kind() == SeedFunction::Kind::Frobenius) {
        const double d = bregman(s, A, B);
        frob = std::max(frob, std::abs(d - (A.matrix() - B.matrix()).squaredNorm()));
      }
      Eigen::MatrixXd H = random_matrix(rng, n, n);
      H = 0.5 * (H + H.transpose()).eval();
      const double h = 1e-5;
      const auto dphi = [&](double x) { return s.dphi(x); };
      const Eigen::MatrixXd fd =
          (apply_matrix_function(dphi, SpdMatrix(A.matrix() + h * H)) -
           apply_matrix_function(dphi, SpdMatrix(A.matrix() - h * H))) /
          (2 * h);
      const Eigen::MatrixXd an = frechet_phi_prime(s, A, H);
      frechet = std::max(frechet, (an - fd).norm() / std::max(fd.norm(), 1e-12));
    }
  }
  out.push_back({"divergence.nonnegative", nonneg, "150 random SPD pairs"});
  out.push_back(bound_check("divergence.self_zero", self, 1e-10));
  out.push_back(bound_check("divergence.frobenius_identity", frob, 1e-10));
  out.push_back(bound_check("divergence.frechet_derivative", frechet, 1e-5));
  return out;
}

std::vector<CheckResult> manifold_checks(std::mt19937_64& rng) {
  double drift = 0.0;
  double tangent = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 4 + trial % 6;
    const int R = 1 + trial % 3;
    const Eigen::MatrixXd U = reorthonormalize(random_matrix(rng, K, R));
    const Eigen::MatrixXd du = project_tangent(U, random_matrix(rng, K, R));
    const double t = 0.1 + 0.05 * (trial % 10);
    const Eigen::MatrixXd V = exp_stiefel(U, du, t);
    drift = std::max(drift, (V.transpose() * V - Eigen::MatrixXd::Identity(R, R))
                                .cwiseAbs()
                                .maxCoeff());
    const Eigen::MatrixXd sym = U.transpose() * du + du.transpose() * U;
    tangent = std::max(tangent, sym.cwiseAbs().maxCoeff());
  }
  return {bound_check("manifold.exp_orthonormality", drift, 1e-10),
          bound_check("manifold.tangent_projection", tangent, 1e-12)};
}

// Small simulated problem shared by the gradient and optimizer checks.
struct Instance {
  DiagonalizedBasis db;
  std::vector<CurveDesign> designs;
  ModelPoint mp;
};

Instance make_instance(std::uint64_t seed, int K, int R, int N) {
  TruthSpec spec;
  spec.sigma_e = 0.5;
  Instance inst;
  inst.db = make_basis(K, 3, 2);
  inst.designs = make_designs(inst.db, sample_dataset(make_true_model(spec), N, seed));
  inst.mp = random_point(K, R, 0.7, derive_seed(seed, 99));
  inst.mp.lambda << 2.0, 0.6;
  return inst;
}

}  // namespace

double gradient_check_error(const SeedFunction& seed,
                            const DiagonalizedBasis& db, const ModelPoint& mp,
                            const std::vector<CurveDesign>& designs, double eta,
                            const GradientHook& hook) {
  EuclideanGradient g = loss_grad(seed, db, mp, designs, eta);
  if (hook) hook(g);
  // Loss and penalty are differenced separately: the penalty can be large
  // enough to swamp the loss blocks with roundoff.
  auto f_loss = [&](const ModelPoint& p) { return loss(seed, p, designs); };
  auto f_pen = [&](const ModelPoint& p) { return penalty_value(db, p, eta); };
  const double h = 1e-5;
  auto central = [&](auto&& bump) {
    ModelPoint a = mp, b = mp;
    bump(a, h);
    bump(b, -h);
    return (f_loss(a) - f_loss(b)) / (2 * h) + (f_pen(a) - f_pen(b)) / (2 * h);
  };
  Eigen::MatrixXd fdU(mp.K(), mp.R());
  for (int i = 0; i < mp.K(); ++i)
    for (int r = 0; r < mp.R(); ++r)
      fdU(i, r) = central([&](ModelPoint& p, double d) { p.U(i, r) += d; });
  Eigen::VectorXd fdL(mp.R());
  for (int r = 0; r < mp.R(); ++r)
    fdL(r) = central([&](ModelPoint& p, double d) { p.lambda(r) += d; });
  const double fdS = central([&](ModelPoint& p, double d) { p.sigma2 += d; });
  auto rel = [](double num, double den) { return num / std::max(den, 1e-8); };
  return std::max({rel((g.U - fdU).norm(), fdU.norm()),
                   rel((g.lambda - fdL).norm(), fdL.norm()),
                   rel(std::abs(g.sigma2 - fdS), std::abs(fdS))});
}

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<CheckResult> out = basis_checks();
  for (auto& r : divergence_checks(rng)) out.push_back(std::move(r));
  for (auto& r : manifold_checks(rng)) out.push_back(std::move(r));

  const Instance inst = make_instance(options.seed, 8, 2, 5);
  for (const SeedFunction& s : {SeedFunction::frobenius(), SeedFunction::logdet(),
                                SeedFunction::von_neumann()}) {
    double worst = 0.0;
    for (double eta : {0.0, 0.1}) {
      worst = std::max(worst, gradient_check_error(s, inst.db, inst.mp, inst.designs,
                                                   eta, options.gradient_hook));
    }
    out.push_back(bound_check("gradient." + s.name(), worst, 1e-5));
  }

  const Instance big = make_instance(options.seed, 10, 2, 60);
  const Objective obj(SeedFunction::frobenius(), big.db, big.designs,
                      Eigen::VectorXd::Constant(2, 1e-3));
  FitConfig config;
  config.max_iters = 50;
  const FitResult fr = fit_from(obj, big.mp, config);
  bool monotone = true;
  for (std::size_t i = 1; i < fr.loss_trace.size(); ++i) {
    monotone = monotone && fr.loss_trace[i] <= fr.loss_trace[i - 1];
  }
  out.push_back({"optimizer.monotone_descent",
                 monotone && fr.loss_trace.back() < fr.loss_trace.front(),
                 std::to_string(fr.iterations) + " iterations, objective " +
                     sci(fr.loss_trace.front()) + " -> " + sci(fr.loss_trace.back())});
  return out;
}

}  // namespace fpca
