#include <doctest.h>

#include <cmath>
#include <random>

#include "fpca/model.hpp"
#include "fpca/simulate.hpp"
#include "oracles.hpp"

using namespace fpca;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const SeedFunction kSeeds[] = {SeedFunction::frobenius(), SeedFunction::logdet(),
                               SeedFunction::von_neumann()};

// φ(x) = x² routed through the generic eigendecomposition code.
SeedFunction generic_square() {
  return SeedFunction::custom(
      "square", [](double x) { return x * x; }, [](double x) { return 2 * x; },
      [](double) { return 2.0; });
}

ModelPoint random_mp(std::mt19937_64& rng, int K, int R) {
  ModelPoint mp;
  mp.U = oracle::random_orthonormal(rng, K, R);
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  mp.lambda.resize(R);
  for (int r = 0; r < R; ++r) mp.lambda[r] = unif(rng);
  mp.sigma2 = unif(rng);
  return mp;
}

std::vector<CurveDesign> random_designs(std::mt19937_64& rng, const DiagonalizedBasis& db,
                                        int N, int M_lo = 2, int M_hi = 5) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> count(M_lo, M_hi);
  std::normal_distribution<double> normal;
  std::vector<CurveDesign> out;
  for (int n = 0; n < N; ++n) {
    const int M = count(rng);
    std::vector<double> t(M), y(M);
    for (int j = 0; j < M; ++j) {
      t[j] = unif(rng);
      y[j] = normal(rng);
    }
    out.push_back(curve_design(db, t, y));
  }
  return out;
}

// (1/N) Σ M⁻² tr{−φ(C) − φ′(C)(S − C)} from fresh matrix functions.
double loss_oracle(const SeedFunction& s, const ModelPoint& mp,
                   const std::vector<CurveDesign>& designs) {
  double total = 0.0;
  const MatrixXd W = mp.U * mp.lambda.asDiagonal() * mp.U.transpose();
  for (const auto& cd : designs) {
    MatrixXd C = cd.B * W * cd.B.transpose();
    C.diagonal().array() += mp.sigma2;
    C = 0.5 * (C + C.transpose());
    const MatrixXd phiC = oracle::matfun(C, [&](double x) { return s.phi(x); });
    const MatrixXd dphiC = oracle::matfun(C, [&](double x) { return s.dphi(x); });
    total += (-phiC - dphiC * (cd.S - C)).trace() / (double(cd.M) * cd.M);
  }
  return total / designs.size();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Central differences of loss + penalty along every coordinate.
EuclideanGradient fd_gradient(const Objective& obj, const ModelPoint& mp, double h) {
  auto f = [&](const ModelPoint& p) {
    const Evaluation e = obj.evaluate(p, false);
    return std::pair{e.loss, e.penalty};
  };
  auto diff = [&](ModelPoint a, ModelPoint b) {
    const auto [la, pa] = f(a);
    const auto [lb, pb] = f(b);
    return ((la - lb) + (pa - pb)) / (2 * h);
  };
  EuclideanGradient g;
  g.U.resize(mp.K(), mp.R());
  for (int i = 0; i < mp.K(); ++i)
    for (int r = 0; r < mp.R(); ++r) {
      ModelPoint a = mp, b = mp;
      a.U(i, r) += h;
      b.U(i, r) -= h;
      g.U(i, r) = diff(a, b);
    }
  g.lambda.resize(mp.R());
  for (int r = 0; r < mp.R(); ++r) {
    ModelPoint a = mp, b = mp;
    a.lambda[r] += h;
    b.lambda[r] -= h;
    g.lambda[r] = diff(a, b);
  }
  ModelPoint a = mp, b = mp;
  a.sigma2 += h;
  b.sigma2 -= h;
  g.sigma2 = diff(a, b);
  return g;
}

}  // namespace

TEST_CASE("curve_design") {
  const DiagonalizedBasis db = make_basis(8);
  const CurveDesign one = curve_design(db, {0.3}, {2.0});
  CHECK(one.M == 1);
  CHECK(one.S(0, 0) == 4.0);
  const CurveDesign zero = curve_design(db, {0.1, 0.2, 0.9}, {0, 0, 0});
  CHECK(zero.S.isZero(0));
  const CurveDesign cd = curve_design(db, {0.1, 0.4, 0.5, 0.8}, {1.0, -2.0, 0.5, 3.0});
  Eigen::JacobiSVD<MatrixXd> svd(cd.S);
  CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);
  CHECK((cd.B.row(1).transpose() - eval_diag(db, 0.4)).norm() == 0.0);
  CHECK_THROWS_AS(curve_design(db, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(curve_design(db, {0.1}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(curve_design(db, {1.2}, {1.0}), std::invalid_argument);
}

TEST_CASE("model_cov") {
  std::mt19937_64 rng(1);
  const DiagonalizedBasis db = make_basis(8);
  ModelPoint mp = random_mp(rng, 8, 2);
  const CurveDesign cd = curve_design(db, {0.1, 0.5, 0.52, 0.9}, {1, 2, 3, 4});
  const SpdMatrix C = model_cov(mp, cd);
  CHECK(C.eigenvalues().minCoeff() >= mp.sigma2 - 1e-12);

  ModelPoint tiny = mp;
  tiny.lambda.setConstant(1e-12);
  const MatrixXd Ct = model_cov(tiny, cd).matrix();
  CHECK((Ct - mp.sigma2 * MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);

  const CurveDesign single = curve_design(db, {0.3}, {1.0});
  const VectorXd b = eval_diag(db, 0.3);
  const double expect = b.dot(mp.W() * b) + mp.sigma2;
  CHECK(model_cov(mp, single).matrix()(0, 0) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("penalty_value") {
  std::mt19937_64 rng(2);
  const DiagonalizedBasis db = make_basis(12, 3, 2);
  ModelPoint mp = random_mp(rng, 12, 2);
  CHECK(penalty_value(db, mp, 0.0) == 0.0);

  ModelPoint low = mp;
  low.U = MatrixXd::Zero(12, 2);
  low.U(0, 0) = 1.0;
  low.U(1, 1) = 1.0;
  CHECK(penalty_value(db, low, 5.0) == 0.0);

  // η Σ_r ∫ (ψ_r'')²; ψ'' is piecewise linear so Simpson is exact per interval.
  const double eta = 0.3;
  double ref = 0.0;
  for (int r = 0; r < 2; ++r) {
    const VectorXd c = mp.U.col(r);
    ref += oracle::simpson([&](double u) { return std::pow(eval_spline(db, c, u, 2), 2); },
                           db.knots().breakpoints(), 2);
  }
  CHECK(penalty_value(db, mp, eta) == doctest::Approx(eta * ref).epsilon(1e-6));

  // Depends on U only through tr(UᵀΓU).
  ModelPoint flipped = mp;
  flipped.U.col(0) *= -1;
  flipped.U.col(0).swap(flipped.U.col(1));
  CHECK(penalty_value(db, flipped, eta) == doctest::Approx(penalty_value(db, mp, eta)));

  VectorXd etas(2);
  etas << 0.1, 0.4;
  const double g0 = mp.U.col(0).dot(db.gamma().asDiagonal() * mp.U.col(0));
  const double g1 = mp.U.col(1).dot(db.gamma().asDiagonal() * mp.U.col(1));
  CHECK(penalty_value(db, mp, etas) == doctest::Approx(0.1 * g0 + 0.4 * g1));
}

TEST_CASE("loss agrees with an independent evaluation") {
  std::mt19937_64 rng(3);
  const DiagonalizedBasis db = make_basis(8);
  const auto designs = random_designs(rng, db, 7);
  for (int trial = 0; trial < 5; ++trial) {
    const ModelPoint mp = random_mp(rng, 8, 2);
    for (const auto& s : kSeeds) {
      CHECK(loss(s, mp, designs) == doctest::Approx(loss_oracle(s, mp, designs)).epsilon(1e-10));
    }
  }
}

TEST_CASE("Frobenius loss differences are squared-norm differences") {
  std::mt19937_64 rng(4);
  const DiagonalizedBasis db = make_basis(8);
  const auto designs = random_designs(rng, db, 9);
  const ModelPoint a = random_mp(rng, 8, 2), b = random_mp(rng, 8, 2);
  double expect = 0.0;
  for (const auto& cd : designs) {
    const double w = 1.0 / (double(cd.M) * cd.M);
    expect += w * ((cd.S - model_cov(a, cd).matrix()).squaredNorm() -
                   (cd.S - model_cov(b, cd).matrix()).squaredNorm());
  }
  expect /= designs.size();
  const SeedFunction f = SeedFunction::frobenius();
  CHECK(std::abs(loss(f, a, designs) - loss(f, b, designs) - expect) < 1e-9);
}

TEST_CASE("LogDet scalar reduction") {
  const DiagonalizedBasis db = make_basis(6);
  ModelPoint mp;
  mp.U = MatrixXd::Identity(6, 1);
  mp.lambda = VectorXd::Constant(1, 0.7);
  mp.sigma2 = 0.4;
  const std::vector<CurveDesign> d{curve_design(db, {0.42}, {1.3})};
  const double b0 = eval_diag(db, 0.42)[0];
  const double c = 0.7 * b0 * b0 + 0.4, s = 1.3 * 1.3;
  CHECK(loss(SeedFunction::logdet(), mp, d) ==
        doctest::Approx(std::log(c) + s / c - 1.0).epsilon(1e-13));
}

TEST_CASE("loss is invariant to column permutations and sign flips") {
  std::mt19937_64 rng(5);
  const DiagonalizedBasis db = make_basis(8);
  const auto designs = random_designs(rng, db, 6);
  const ModelPoint mp = random_mp(rng, 8, 3);
  ModelPoint perm = mp;
  perm.U.col(0) = -mp.U.col(2);
  perm.U.col(2) = mp.U.col(0);
  perm.lambda[0] = mp.lambda[2];
  perm.lambda[2] = mp.lambda[0];
  for (const auto& s : kSeeds) {
    CHECK(loss(s, perm, designs) == doctest::Approx(loss(s, mp, designs)).epsilon(1e-12));
  }
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(6);
  const DiagonalizedBasis db = make_basis(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto designs = random_designs(rng, db, 5);
    const ModelPoint mp = random_mp(rng, 8, 2);
    for (double eta : {0.0, 0.1}) {
      for (const auto& s : kSeeds) {
        CAPTURE(trial);
        CAPTURE(s.name());
        const Objective obj(s, db, designs, VectorXd::Constant(2, eta));
        const EuclideanGradient an = obj.evaluate(mp, true).grad;
        const EuclideanGradient fd = fd_gradient(obj, mp, 1e-6);
        CHECK((an.U - fd.U).norm() <= 1e-5 * std::max(1.0, an.U.norm()));
        CHECK((an.lambda - fd.lambda).norm() <= 1e-5 * std::max(1.0, an.lambda.norm()));
        CHECK(std::abs(an.sigma2 - fd.sigma2) <= 1e-5 * std::max(1.0, std::abs(an.sigma2)));

        const EuclideanGradient lg = loss_grad(s, db, mp, designs, eta);
        CHECK((lg.U - an.U).norm() <= 1e-12 * std::max(1.0, an.U.norm()));
      }
    }
  }
}

TEST_CASE("gradient vanishes where S equals C") {
  std::mt19937_64 rng(7);
  const DiagonalizedBasis db = make_basis(8);
  const ModelPoint mp = random_mp(rng, 8, 2);
  std::vector<CurveDesign> designs;
  for (double u : {0.05, 0.3, 0.55, 0.81}) {
    const VectorXd b = eval_diag(db, u);
    const double c = b.dot(mp.W() * b) + mp.sigma2;
    designs.push_back(curve_design(db, {u}, {std::sqrt(c)}));
  }
  for (const auto& s : kSeeds) {
    const Objective obj(s, db, designs, VectorXd::Zero(2));
    const EuclideanGradient g = obj.evaluate(mp, true).grad;
    CHECK(g.U.norm() < 1e-12);
    CHECK(g.lambda.norm() < 1e-12);
    CHECK(std::abs(g.sigma2) < 1e-12);
  }
}

TEST_CASE("Frobenius fast path equals the generic route") {
  std::mt19937_64 rng(8);
  const DiagonalizedBasis db = make_basis(10);
  const auto designs = random_designs(rng, db, 40, 1, 8);
  const ModelPoint mp = random_mp(rng, 10, 3);
  const VectorXd eta = VectorXd::Constant(3, 0.01);
  const Objective fast(SeedFunction::frobenius(), db, designs, eta);
  const Evaluation a = fast.evaluate(mp, true);
  const Evaluation b = evaluate_generic(SeedFunction::frobenius(), db, mp, designs, eta);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
  CHECK((a.grad.U - b.grad.U).norm() < 1e-9);
  CHECK((a.grad.lambda - b.grad.lambda).norm() < 1e-9);
  CHECK(std::abs(a.grad.sigma2 - b.grad.sigma2) < 1e-9);

  // Closed-form curvature against the Loewner form for φ(x) = x².
  const Objective generic(generic_square(), db, designs, eta);
  const CurvatureDiagonal ca = fast.curvature(mp), cb = generic.curvature(mp);
  CHECK((ca.U - cb.U).norm() <= 1e-10 * cb.U.norm());
  CHECK((ca.loglambda - cb.loglambda).norm() <= 1e-10 * cb.loglambda.norm());
  CHECK(ca.logsigma2 == doctest::Approx(cb.logsigma2).epsilon(1e-10));
}

TEST_CASE("curvature diagonal is positive") {
  std::mt19937_64 rng(9);
  const DiagonalizedBasis db = make_basis(8);
  const auto designs = random_designs(rng, db, 20);
  const ModelPoint mp = random_mp(rng, 8, 2);
  for (const auto& s : kSeeds) {
    const CurvatureDiagonal c = Objective(s, db, designs, VectorXd::Constant(2, 0.1)).curvature(mp);
    CHECK(c.U.minCoeff() > 0.0);
    CHECK(c.loglambda.minCoeff() > 0.0);
    CHECK(c.logsigma2 > 0.0);
  }
}

TEST_CASE("evaluation is bit-identical across worker counts") {
  std::mt19937_64 rng(10);
  const DiagonalizedBasis db = make_basis(10);
  const auto designs = random_designs(rng, db, 257);
  const ModelPoint mp = random_mp(rng, 10, 2);
  for (const auto& s : kSeeds) {
    const VectorXd eta = VectorXd::Constant(2, 1e-3);
    const Evaluation a = Objective(s, db, designs, eta, 1).evaluate(mp, true);
    const Evaluation b = Objective(s, db, designs, eta, 4).evaluate(mp, true);
    CHECK(a.objective == b.objective);
    CHECK(a.grad.U == b.grad.U);
    CHECK(a.grad.lambda == b.grad.lambda);
    CHECK(a.grad.sigma2 == b.grad.sigma2);
  }
}

TEST_CASE("expected loss over scores and noise is the loss at the true covariance") {
  // The loss is affine in S, so E[loss | times] replaces S_n by K_n.
  const TrueModel tm = default_true_model();
  const DiagonalizedBasis db = make_basis(8);
  std::mt19937_64 rng(11);
  const ModelPoint mp = random_mp(rng, 8, 2);
  const std::vector<std::vector<double>> times{{0.1, 0.45, 0.8}, {0.3, 0.6}, {0.2, 0.25, 0.5, 0.95}};

  std::vector<CurveDesign> mean_designs;
  for (const auto& t : times) {
    CurveDesign cd = curve_design(db, t, std::vector<double>(t.size(), 0.0));
    cd.S = true_cov_matrix(tm, t);
    mean_designs.push_back(cd);
  }
  std::normal_distribution<double> normal;
  for (const auto& s : {SeedFunction::frobenius(), SeedFunction::logdet()}) {
    const double target = loss_oracle(s, mp, mean_designs);
    const int reps = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < reps; ++k) {
      std::vector<CurveDesign> designs;
      for (const auto& t : times) {
        const double th1 = normal(rng), th2 = normal(rng);
        std::vector<double> y(t.size());
        for (std::size_t j = 0; j < t.size(); ++j) {
          y[j] = 2.0 * th1 * tm.eigenfunctions[0](t[j]) + th2 * tm.eigenfunctions[1](t[j]) +
                 tm.sigma_e * normal(rng);
        }
        designs.push_back(curve_design(db, t, y));
      }
      const double l = loss(s, mp, designs);
      sum += l;
      sumsq += l * l;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sumsq / reps - mean * mean) / reps);
    CAPTURE(s.name());
    CHECK(std::abs(mean - target) < 3 * se);
  }
}
