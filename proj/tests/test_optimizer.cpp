#include <doctest.h>

#include <cmath>
#include <random>

#include "fpca/eval.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/simulate.hpp"
#include "oracles.hpp"

using namespace fpca;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

const SeedFunction kSeeds[] = {SeedFunction::frobenius(), SeedFunction::logdet(),
                               SeedFunction::von_neumann()};

bool nonincreasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1] + 1e-12 * std::max(1.0, std::abs(trace[i - 1]))) return false;
  }
  return true;
}

double penalty_trace(const DiagonalizedBasis& db, const ModelPoint& mp) {
  return penalty_value(db, mp, 1.0);
}

}  // namespace

TEST_CASE("FitConfig validation names the field") {
  FitConfig c;
  CHECK_NOTHROW(c.validate());
  c.armijo.shrink = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("shrink"), std::invalid_argument);
  c = FitConfig{};
  c.armijo.sufficient = 0.6;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("sufficient"), std::invalid_argument);
  c = FitConfig{};
  c.grad_tol = -1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("grad_tol"), std::invalid_argument);
  c = FitConfig{};
  c.bounds = ParameterBounds{1.0, 2.0, 1.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(fit_method_from_string("gd") == FitMethod::GradientDescent);
  CHECK(to_string(FitStatus::LineSearchFailure) == "line-search-failure");
}

TEST_CASE("sort_components orders by eigenvalue, ties stable") {
  ModelPoint mp;
  mp.U = MatrixXd::Identity(4, 3);
  mp.lambda = VectorXd(3);
  mp.lambda << 1.0, 3.0, 1.0;
  mp.sort_components();
  CHECK(mp.lambda[0] == 3.0);
  CHECK(mp.U(1, 0) == 1.0);
  CHECK(mp.U(0, 1) == 1.0);
  CHECK(mp.U(2, 2) == 1.0);
}

TEST_CASE("initializer recovers W from noiseless dense working-model data") {
  const DiagonalizedBasis db = make_basis(8);
  std::mt19937_64 rng(1);
  const MatrixXd U = oracle::random_orthonormal(rng, 8, 2);
  const VectorXd lam = (VectorXd(2) << 3.0, 1.0).finished();
  const MatrixXd W = U * lam.asDiagonal() * U.transpose();
  SparseDataset data;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Scores whitened so their empirical covariance is exactly diag(lam).
  const int N = 2000;
  MatrixXd theta = oracle::random_matrix(rng, N, 2);
  const MatrixXd cov = theta.transpose() * theta / N;
  theta = theta * oracle::matfun(cov, [](double x) { return 1.0 / std::sqrt(x); });
  for (int n = 0; n < N; ++n) {
    Curve c;
    const double a = std::sqrt(lam[0]) * theta(n, 0), b = std::sqrt(lam[1]) * theta(n, 1);
    for (int j = 0; j < 50; ++j) {
      const double u = unif(rng);
      c.times.push_back(u);
      c.values.push_back(eval_diag(db, u).dot(a * U.col(0) + b * U.col(1)));
    }
    data.curves.push_back(c);
  }
  const InitResult init = initialize(db, data, 2, 1.0);
  CHECK_FALSE(init.fallback);
  CHECK((init.point.W() - W).norm() / W.norm() < 0.05);
  CHECK_NOTHROW(init.point.validate());
}

TEST_CASE("initializer with R = K and the sparse fallback") {
  const DiagonalizedBasis db = make_basis(6);
  const SparseDataset data = sample_dataset(default_true_model(), 300, 3);
  const InitResult full = initialize(db, data, 6, 1.0);
  CHECK(full.point.orthonormality_drift() < 1e-10);
  CHECK_NOTHROW(full.point.validate());

  const DiagonalizedBasis big = make_basis(20);
  const SparseDataset tiny = sample_dataset(default_true_model(), 2, 3);
  const InitResult fb = initialize(big, tiny, 2, 0.7);
  CHECK(fb.fallback);
  CHECK((fb.point.U - MatrixXd::Identity(20, 2)).norm() == 0.0);
  CHECK(fb.point.lambda == VectorXd::Ones(2));
  CHECK(fb.point.sigma2 == 0.7);
}

TEST_CASE("stationary start returns immediately") {
  const DiagonalizedBasis db = make_basis(8);
  std::mt19937_64 rng(2);
  ModelPoint mp;
  mp.U = oracle::random_orthonormal(rng, 8, 2);
  mp.lambda = (VectorXd(2) << 2.0, 0.5).finished();
  mp.sigma2 = 0.3;
  std::vector<CurveDesign> designs;
  for (double u : {0.05, 0.3, 0.55, 0.81, 0.97}) {
    const VectorXd b = eval_diag(db, u);
    designs.push_back(curve_design(db, {u}, {std::sqrt(b.dot(mp.W() * b) + mp.sigma2)}));
  }
  for (const auto& s : kSeeds) {
    const FitResult r = fit_from(Objective(s, db, designs, VectorXd::Zero(2)), mp, FitConfig{});
    CHECK(r.status == FitStatus::Converged);
    CHECK(r.iterations == 0);
  }
}

TEST_CASE("loss trace is nonincreasing for every seed and method") {
  const TrueModel tm = default_true_model();
  const DiagonalizedBasis db = make_basis(10);
  for (int inst = 0; inst < 4; ++inst) {
    const SparseDataset data = sample_dataset(tm, 100, 100 + inst);
    for (const auto& s : kSeeds) {
      for (auto method : {FitMethod::ConjugateGradient, FitMethod::GradientDescent}) {
        FitConfig c;
        c.method = method;
        c.max_iters = 200;
        const FitResult r = fit(s, db, data, 2, 1e-3, c);
        CAPTURE(s.name());
        CHECK(nonincreasing(r.loss_trace));
        CHECK(r.status != FitStatus::LineSearchFailure);
        CHECK(r.point.orthonormality_drift() < 1e-8);
        CHECK(r.loss_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
      }
    }
  }
}

TEST_CASE("plain and preconditioned variants reach the same objective") {
  const DiagonalizedBasis db = make_basis(10);
  const SparseDataset data = sample_dataset(default_true_model(), 200, 9);
  FitConfig plain;
  plain.precondition = false;
  plain.powell_restart = false;
  plain.armijo.interpolate = false;
  plain.max_iters = 5000;
  plain.grad_tol = 1e-8;
  FitConfig fast = plain;
  fast.precondition = fast.powell_restart = fast.armijo.interpolate = true;
  const FitResult a = fit(SeedFunction::frobenius(), db, data, 2, 1e-3, plain);
  const FitResult b = fit(SeedFunction::frobenius(), db, data, 2, 1e-3, fast);
  CHECK(a.loss_trace.back() == doctest::Approx(b.loss_trace.back()).epsilon(1e-6));
  CHECK((a.point.W() - b.point.W()).norm() < 1e-3 * a.point.W().norm());
}

TEST_CASE("default instance converges and recovers the eigenfunctions") {
  const TrueModel tm = default_true_model();
  const DiagonalizedBasis db = make_basis(20);
  const SparseDataset data = sample_dataset(tm, 500, 7);
  const FitResult r = fit(SeedFunction::frobenius(), db, data, 2, 1e-4, FitConfig{});
  CHECK(r.status == FitStatus::Converged);
  CHECK(r.iterations <= 500);
  CHECK(r.point.lambda[0] >= r.point.lambda[1]);
  const AlignedError ae = align(db, r.point.U, tm.eigenfunctions, 1e-4);
  for (const auto& c : ae.components) CHECK(c.l2_sq_error < 0.15);
}

TEST_CASE("fits are deterministic and independent of the worker count") {
  const DiagonalizedBasis db = make_basis(12);
  const SparseDataset data = sample_dataset(default_true_model(), 300, 5);
  for (const auto& s : kSeeds) {
    const FitResult a = fit(s, db, data, 2, 1e-3, FitConfig{}, 1);
    const FitResult b = fit(s, db, data, 2, 1e-3, FitConfig{}, 1);
    const FitResult c = fit(s, db, data, 2, 1e-3, FitConfig{}, 3);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.point.U == b.point.U);
    CHECK(a.loss_trace == c.loss_trace);
    CHECK(a.point.U == c.point.U);
    CHECK(a.point.sigma2 == c.point.sigma2);
  }
}

TEST_CASE("a large penalty shrinks the fitted roughness") {
  const DiagonalizedBasis db = make_basis(20);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SparseDataset data = sample_dataset(default_true_model(), 300, seed);
    const FitResult none = fit(SeedFunction::frobenius(), db, data, 2, 0.0, FitConfig{});
    const FitResult heavy = fit(SeedFunction::frobenius(), db, data, 2, 1e-1, FitConfig{});
    CHECK(penalty_trace(db, heavy.point) < penalty_trace(db, none.point));
  }
}

TEST_CASE("parameter bounds are respected") {
  const DiagonalizedBasis db = make_basis(12);
  const SparseDataset data = sample_dataset(default_true_model(), 200, 4);
  const InitResult init = initialize(db, data, 2, 1.0);
  const double start_pen = penalty_trace(db, init.point);
  FitConfig c;
  c.bounds = ParameterBounds{1.05 * start_pen, 1e-3, 1e3};
  REQUIRE(c.bounds->contains(db, init.point));
  const FitResult r = fit_from(
      Objective(SeedFunction::frobenius(), db, make_designs(db, data), VectorXd::Zero(2)),
      init.point, c);
  CHECK(c.bounds->contains(db, r.point));
  CHECK(nonincreasing(r.loss_trace));
}

TEST_CASE("random_point is orthonormal and reproducible") {
  const ModelPoint a = random_point(9, 3, 0.5, 42), b = random_point(9, 3, 0.5, 42);
  CHECK(a.U == b.U);
  CHECK(a.orthonormality_drift() < 1e-12);
  CHECK(a.lambda == VectorXd::Ones(3));
  CHECK(a.sigma2 == 0.5);
}
