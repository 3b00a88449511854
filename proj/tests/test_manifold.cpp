#include <doctest.h>

#include <cmath>
#include <random>

#include "fpca/manifold.hpp"
#include "oracles.hpp"

using namespace fpca;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double drift(const MatrixXd& X) {
  return (X.transpose() * X - MatrixXd::Identity(X.cols(), X.cols())).norm();
}

MatrixXd random_tangent(std::mt19937_64& rng, const MatrixXd& U) {
  return project_tangent(U, oracle::random_matrix(rng, U.rows(), U.cols()));
}

}  // namespace

TEST_CASE("project_tangent") {
  std::mt19937_64 rng(1);
  const MatrixXd U = oracle::random_orthonormal(rng, 9, 3);
  const MatrixXd G = oracle::random_matrix(rng, 9, 3);
  const MatrixXd du = project_tangent(U, G);
  const MatrixXd skew = U.transpose() * du;
  CHECK((skew + skew.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((project_tangent(U, du) - du).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(project_tangent(U, U).norm() < 1e-12);
  for (int k = 0; k < 50; ++k) {
    const MatrixXd t = random_tangent(rng, U);
    CHECK(std::abs(((G - du).array() * t.array()).sum()) < 1e-10);
  }
}

TEST_CASE("exp_stiefel planar closed form") {
  MatrixXd U(2, 1), du(2, 1);
  U << 1, 0;
  const double a = 0.7;
  du << 0, a;
  for (double t : {0.0, 0.3, 1.0, 2.5, -4.0}) {
    const MatrixXd X = exp_stiefel(U, du, t);
    CHECK(std::abs(X(0, 0) - std::cos(a * t)) < 1e-12);
    CHECK(std::abs(X(1, 0) - std::sin(a * t)) < 1e-12);
  }
  // Group property along the planar geodesic.
  const MatrixXd Xs = exp_stiefel(U, du, 0.4);
  MatrixXd dus(2, 1);
  dus << -a * std::sin(a * 0.4), a * std::cos(a * 0.4);
  CHECK((exp_stiefel(Xs, dus, 0.9) - exp_stiefel(U, du, 1.3)).norm() < 1e-12);
}

TEST_CASE("exp_stiefel stays on the manifold") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int K = 3 + k % 10, R = 1 + k % std::min(K, 4);
    const MatrixXd U = oracle::random_orthonormal(rng, K, R);
    MatrixXd du = random_tangent(rng, U);
    du *= 10.0 * std::abs(unif(rng)) / du.norm();
    const double t = unif(rng) >= 0 ? 1.0 : -1.0;
    worst = std::max(worst, drift(exp_stiefel(U, du, t)));
  }
  CHECK(worst < 1e-10);

  const MatrixXd U = oracle::random_orthonormal(rng, 6, 2);
  const MatrixXd du = random_tangent(rng, U);
  CHECK((exp_stiefel(U, du, 0.0) - U).norm() < 1e-14);
  CHECK((exp_stiefel(U, MatrixXd::Zero(6, 2), 3.0) - U).norm() < 1e-14);
  CHECK(exp_stiefel(U, du, 0.37) == exp_stiefel(U, du, 0.37));
}

TEST_CASE("exp_stiefel has initial velocity du") {
  std::mt19937_64 rng(3);
  const MatrixXd U = oracle::random_orthonormal(rng, 7, 3);
  const MatrixXd du = random_tangent(rng, U);
  const double h = 1e-6;
  const MatrixXd slope = (exp_stiefel(U, du, h) - exp_stiefel(U, du, -h)) / (2 * h);
  CHECK((slope - du).norm() < 1e-6 * std::max(1.0, du.norm()));
}

TEST_CASE("QR retraction agrees with the geodesic to second order") {
  std::mt19937_64 rng(4);
  const MatrixXd U = oracle::random_orthonormal(rng, 8, 3);
  const MatrixXd du = random_tangent(rng, U);
  CHECK((retract_qr(U, du, 0.0) - U).norm() < 1e-14);
  std::vector<double> ratios;
  for (double t : {1e-1, 1e-2, 1e-3}) {
    const MatrixXd X = retract_qr(U, du, t);
    CHECK(drift(X) < 1e-12);
    ratios.push_back((X - exp_stiefel(U, du, t)).norm() / (t * t));
  }
  const double hi = *std::max_element(ratios.begin(), ratios.end());
  const double lo = *std::min_element(ratios.begin(), ratios.end());
  CHECK(hi / lo < 3.0);
  // Richardson: halving t divides the gap by about four.
  const double g1 = (retract_qr(U, du, 0.02) - exp_stiefel(U, du, 0.02)).norm();
  const double g2 = (retract_qr(U, du, 0.01) - exp_stiefel(U, du, 0.01)).norm();
  CHECK(g1 / g2 > 4.0 / 3.0);
  CHECK(g1 / g2 < 12.0);
}

TEST_CASE("reorthonormalize repairs drift") {
  std::mt19937_64 rng(5);
  MatrixXd U = oracle::random_orthonormal(rng, 6, 2);
  U += 1e-6 * oracle::random_matrix(rng, 6, 2);
  CHECK(drift(reorthonormalize(U)) < 1e-14);
}

TEST_CASE("move_point") {
  std::mt19937_64 rng(6);
  ModelPoint mp;
  mp.U = oracle::random_orthonormal(rng, 6, 2);
  mp.lambda = VectorXd::Constant(2, 1.5);
  mp.sigma2 = 0.3;
  TangentVector tv = TangentVector::zero(6, 2);
  tv.du = random_tangent(rng, mp.U);
  tv.dloglambda << 1.0, -2.0;
  tv.dlogsigma2 = 0.5;

  const ModelPoint same = move_point(mp, tv, 0.0);
  CHECK((same.U - mp.U).norm() < 1e-14);
  CHECK(same.lambda == mp.lambda);
  CHECK(same.sigma2 == mp.sigma2);

  for (double t : {0.5, -3.0, 40.0}) {
    for (auto kind : {RetractionKind::Exponential, RetractionKind::QR}) {
      const ModelPoint x = move_point(mp, tv, t, kind);
      CHECK(x.lambda[0] == doctest::Approx(1.5 * std::exp(t)).epsilon(1e-14));
      CHECK(x.lambda[1] == doctest::Approx(1.5 * std::exp(-2 * t)).epsilon(1e-14));
      CHECK(x.sigma2 == doctest::Approx(0.3 * std::exp(0.5 * t)).epsilon(1e-14));
      CHECK(x.lambda.minCoeff() > 0.0);
      CHECK(x.orthonormality_drift() < 1e-10);
    }
  }
}

TEST_CASE("riemannian_grad") {
  std::mt19937_64 rng(7);
  const DiagonalizedBasis db = make_basis(8);
  ModelPoint mp;
  mp.U = oracle::random_orthonormal(rng, 8, 2);
  mp.lambda = VectorXd::Constant(2, 1.0);
  mp.lambda[0] = 2.0;
  mp.sigma2 = 0.5;

  EuclideanGradient zero{MatrixXd::Zero(8, 2), VectorXd::Zero(2), 0.0};
  CHECK(norm(riemannian_grad(mp, zero)) == 0.0);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  std::vector<CurveDesign> designs;
  for (int n = 0; n < 6; ++n) {
    std::vector<double> t{unif(rng), unif(rng), unif(rng)}, y{normal(rng), normal(rng), normal(rng)};
    designs.push_back(curve_design(db, t, y));
  }
  for (const auto& s : {SeedFunction::frobenius(), SeedFunction::logdet(), SeedFunction::von_neumann()}) {
    const Objective obj(s, db, designs, VectorXd::Constant(2, 0.05));
    const TangentVector g = riemannian_grad(mp, obj.evaluate(mp, true).grad);
    const MatrixXd sk = mp.U.transpose() * g.du;
    CHECK((sk + sk.transpose()).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, g.du.norm()));

    TangentVector tv = TangentVector::zero(8, 2);
    tv.du = random_tangent(rng, mp.U);
    tv.dloglambda << normal(rng), normal(rng);
    tv.dlogsigma2 = normal(rng);
    const double h = 1e-6;
    const double fd = (obj.value(move_point(mp, tv, h)) - obj.value(move_point(mp, tv, -h))) / (2 * h);
    CHECK(std::abs(fd - inner(g, tv)) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("transport projects onto the new tangent space") {
  std::mt19937_64 rng(8);
  ModelPoint a, b;
  a.U = oracle::random_orthonormal(rng, 7, 2);
  b.U = oracle::random_orthonormal(rng, 7, 2);
  a.lambda = b.lambda = VectorXd::Ones(2);
  TangentVector v = TangentVector::zero(7, 2);
  v.du = random_tangent(rng, a.U);
  v.dloglambda << 0.3, 0.1;
  v.dlogsigma2 = 2.0;
  const TangentVector w = transport(b, v);
  const MatrixXd sk = b.U.transpose() * w.du;
  CHECK((sk + sk.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(w.dloglambda == v.dloglambda);
  CHECK(w.dlogsigma2 == v.dlogsigma2);
  CHECK(inner(v, v) == doctest::Approx(norm(v) * norm(v)));
}
