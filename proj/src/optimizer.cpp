#include "fpca/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

namespace fpca {

std::string to_string(FitMethod m) {
  return m == FitMethod::GradientDescent ? "gradient-descent"
                                         : "conjugate-gradient";
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged:
      return "converged";
    case FitStatus::MaxIters:
      return "max-iters";
    case FitStatus::LineSearchFailure:
      return "line-search-failure";
  }
  return "unknown";
}

FitMethod fit_method_from_string(const std::string& s) {
  if (s == "gd" || s == "gradient-descent") return FitMethod::GradientDescent;
  if (s == "cg" || s == "conjugate-gradient") return FitMethod::ConjugateGradient;
  throw std::invalid_argument("unknown method '" + s +
                              "' (expected gradient-descent or conjugate-gradient)");
}

bool ParameterBounds::contains(const DiagonalizedBasis& db,
                               const ModelPoint& mp) const {
  if (penalty_value(db, mp, 1.0) > b0) return false;
  if (mp.lambda.minCoeff() < b1 || mp.lambda.maxCoeff() > b2) return false;
  return mp.sigma2 >= b1 && mp.sigma2 <= b2;
}

void FitConfig::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(grad_tol >= 0.0)) throw std::invalid_argument("grad_tol must be >= 0");
  if (!(armijo.initial_step > 0.0)) {
    throw std::invalid_argument("armijo initial_step must be positive");
  }
  if (!(armijo.shrink > 0.0 && armijo.shrink < 1.0)) {
    throw std::invalid_argument("armijo shrink must lie in (0, 1)");
  }
  if (!(armijo.sufficient > 0.0 && armijo.sufficient <= 0.5)) {
    throw std::invalid_argument("armijo sufficient-decrease must lie in (0, 0.5]");
  }
  if (armijo.max_shrinks < 1) {
    throw std::invalid_argument("armijo max_shrinks must be >= 1");
  }
  if (!(sigma2_init > 0.0)) {
    throw std::invalid_argument("sigma2_init must be positive");
  }
  if (bounds) {
    if (!(bounds->b0 > 0.0 && bounds->b1 > 0.0 && bounds->b2 > bounds->b1)) {
      throw std::invalid_argument("bounds require b0 > 0 and b2 > b1 > 0");
    }
  }
}

ModelPoint random_point(int K, int R, double sigma2, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd G(K, R);
  for (int j = 0; j < R; ++j)
    for (int i = 0; i < K; ++i) G(i, j) = normal(rng);
  ModelPoint mp;
  mp.U = reorthonormalize(G);
  mp.lambda = Eigen::VectorXd::Ones(R);
  mp.sigma2 = sigma2;
  return mp;
}

namespace {

ModelPoint fallback_point(int K, int R, double sigma2) {
  ModelPoint mp;
  mp.U = Eigen::MatrixXd::Identity(K, R);
  mp.lambda = Eigen::VectorXd::Ones(R);
  mp.sigma2 = sigma2;
  return mp;
}

// Nonzero raw B-spline values at u: first index and m+1 values.
struct SparseRow {
  int first = 0;
  Eigen::VectorXd values;
};

SparseRow sparse_raw(const KnotVector& kv, double u) {
  const int first = knot_span(kv, u) - kv.degree;
  return {first, eval_raw(kv, u, 0).segment(first, kv.degree + 1)};
}

}  // namespace

InitResult initialize(const DiagonalizedBasis& db, const SparseDataset& data,
                      int R, double sigma2_init) {
  const int K = db.dimension();
  if (R < 1 || R > K) throw std::invalid_argument("initialize: need 1 <= R <= K");
  data.validate();

  std::size_t pairs = 0;
  for (const auto& c : data.curves) pairs += c.size() * (c.size() - 1) / 2;
  if (static_cast<double>(pairs) < K * K / 10.0) {
    std::cerr << "warning: ill-posed initialization (" << pairs
              << " off-diagonal pairs for K=" << K
              << "); using identity columns\n";
    return {fallback_point(K, R, sigma2_init), true};
  }

  // Unknowns: upper triangle of the symmetric raw-basis coefficient matrix.
  const int P = K * (K + 1) / 2;
  auto index = [K](int a, int b) {
    if (a > b) std::swap(a, b);
    return a * K - a * (a - 1) / 2 + (b - a);
  };
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P);
  const int width = db.degree() + 1;
  std::vector<int> idx;
  std::vector<double> val;
  for (const auto& c : data.curves) {
    std::vector<SparseRow> rows;
    rows.reserve(c.size());
    for (double u : c.times) rows.push_back(sparse_raw(db.knots(), u));
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        // b_iᵀ W b_j as a linear form in the packed unknowns.
        idx.clear();
        val.clear();
        for (int a = 0; a < width; ++a) {
          for (int b = 0; b < width; ++b) {
            const int k = index(rows[i].first + a, rows[j].first + b);
            const double v = rows[i].values(a) * rows[j].values(b);
            const auto it = std::find(idx.begin(), idx.end(), k);
            if (it == idx.end()) {
              idx.push_back(k);
              val.push_back(v);
            } else {
              val[it - idx.begin()] += v;
            }
          }
        }
        const double target = c.values[i] * c.values[j];
        for (std::size_t s = 0; s < idx.size(); ++s) {
          rhs(idx[s]) += val[s] * target;
          for (std::size_t t = 0; t < idx.size(); ++t) {
            normal(idx[s], idx[t]) += val[s] * val[t];
          }
        }
      }
    }
  }
  const double ridge = 1e-6 * normal.trace() / P;
  normal.diagonal().array() += ridge;
  const Eigen::VectorXd packed = normal.ldlt().solve(rhs);

  Eigen::MatrixXd W_raw(K, K);
  for (int a = 0; a < K; ++a)
    for (int b = a; b < K; ++b) W_raw(a, b) = W_raw(b, a) = packed(index(a, b));
  // b = Tᵀ b_raw with Tᵀ N T = I, hence W = Tᵀ N W_raw N T.
  const Eigen::MatrixXd NT = db.raw_gram() * db.transform();
  Eigen::MatrixXd W = NT.transpose() * W_raw * NT;
  W = 0.5 * (W + W.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W);
  const double top = eig.eigenvalues()(K - 1);
  if (!(top > 0.0)) {
    std::cerr << "warning: initial covariance estimate has no positive "
                 "eigenvalue; using identity columns\n";
    return {fallback_point(K, R, sigma2_init), true};
  }
  const double floor = 1e-4 * top;
  ModelPoint mp;
  mp.U.resize(K, R);
  mp.lambda.resize(R);
  for (int r = 0; r < R; ++r) {
    mp.U.col(r) = eig.eigenvectors().col(K - 1 - r);
    mp.lambda(r) = std::max(eig.eigenvalues()(K - 1 - r), floor);
  }

  // Noise variance from the diagonal residuals y² − b(u)ᵀ W_R b(u).
  const Eigen::MatrixXd W_R = mp.W();
  double resid = 0.0;
  std::size_t count = 0;
  for (const auto& c : data.curves) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      const Eigen::VectorXd b = eval_diag(db, c.times[j]);
      resid += c.values[j] * c.values[j] - b.dot(W_R * b);
      ++count;
    }
  }
  mp.sigma2 = std::max(resid / static_cast<double>(count), 1e-4);
  return {mp, false};
}

namespace {

// Preconditioned gradient −d for the steepest-descent direction d.
struct Preconditioner {
  bool enabled = false;
  CurvatureDiagonal h;

  TangentVector apply(const ModelPoint& x, const TangentVector& g) const {
    if (!enabled) return g;
    TangentVector p;
    p.du = project_tangent(x.U, g.du.cwiseQuotient(h.U));
    p.dloglambda = g.dloglambda.cwiseQuotient(h.loglambda);
    p.dlogsigma2 = g.dlogsigma2 / h.logsigma2;
    return p;
  }
};

Preconditioner make_preconditioner(const Objective& objective,
                                   const ModelPoint& x, bool enabled) {
  Preconditioner pc;
  pc.enabled = enabled;
  if (!enabled) return pc;
  pc.h = objective.curvature(x);
  // Floors keep directions bounded where the data carry no curvature.
  const double floor_u = 1e-8 * std::max(pc.h.U.maxCoeff(), 1e-300);
  pc.h.U = pc.h.U.cwiseMax(floor_u);
  const double top = std::max(pc.h.loglambda.maxCoeff(), pc.h.logsigma2);
  pc.h.loglambda = pc.h.loglambda.cwiseMax(1e-8 * top);
  pc.h.logsigma2 = std::max(pc.h.logsigma2, 1e-8 * top);
  if (!(top > 0.0) || !pc.h.U.allFinite() || !std::isfinite(top)) pc.enabled = false;
  return pc;
}

}  // namespace

FitResult fit_from(const Objective& objective, const ModelPoint& start,
                   const FitConfig& config) {
  config.validate();
  start.validate(1e-8);
  const DiagonalizedBasis& db = objective.basis();
  const ArmijoParams& armijo = config.armijo;

  FitResult result;
  ModelPoint x = start;
  Evaluation ev = objective.evaluate(x, true);
  TangentVector g = riemannian_grad(x, ev.grad);
  double gnorm = norm(g);
  // Relative tolerance, with an absolute floor so an exactly stationary start
  // terminates at once.
  const double threshold = std::max(config.grad_tol * gnorm,
                                    1e-12 * std::max(1.0, std::abs(ev.objective)));
  result.loss_trace.push_back(ev.objective);
  result.grad_norm_trace.push_back(gnorm);

  auto trial_value = [&](const ModelPoint& cand) -> std::optional<double> {
    if (config.bounds && !config.bounds->contains(db, cand)) return std::nullopt;
    try {
      const double v = objective.value(cand);
      if (!std::isfinite(v)) return std::nullopt;
      return v;
    } catch (const std::domain_error&) {
      return std::nullopt;
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  };

  TangentVector p = make_preconditioner(objective, x, config.precondition).apply(x, g);
  double gp = inner(g, p);
  TangentVector d = -p;
  result.status = gnorm <= threshold ? FitStatus::Converged : FitStatus::MaxIters;

  while (result.status != FitStatus::Converged &&
         result.iterations < config.max_iters) {
    double slope = inner(g, d);
    if (!(slope < 0.0)) {
      d = -p;
      slope = -gp;
    }
    double t = armijo.initial_step;
    bool accepted = false;
    ModelPoint cand;
    for (int k = 0; k <= armijo.max_shrinks; ++k) {
      cand = move_point(x, d, t, config.retraction);
      const std::optional<double> v = trial_value(cand);
      if (v && *v <= ev.objective + armijo.sufficient * t * slope) {
        accepted = true;
        break;
      }
      const double curvature = v ? *v - ev.objective - slope * t : 0.0;
      if (armijo.interpolate && curvature > 0.0) {
        const double tq = -slope * t * t / (2.0 * curvature);
        t = std::clamp(tq, 0.1 * t, armijo.shrink * t);
      } else {
        t *= armijo.shrink;
      }
    }
    if (!accepted) {
      result.status = FitStatus::LineSearchFailure;
      break;
    }
    if (cand.orthonormality_drift() > 1e-10) cand.U = reorthonormalize(cand.U);

    x = std::move(cand);
    ++result.iterations;
    ev = objective.evaluate(x, true);
    const TangentVector g_new = riemannian_grad(x, ev.grad);
    const double gnorm_new = norm(g_new);
    result.loss_trace.push_back(ev.objective);
    result.grad_norm_trace.push_back(gnorm_new);
    const TangentVector p_new =
        make_preconditioner(objective, x, config.precondition).apply(x, g_new);
    const double gp_new = inner(g_new, p_new);

    if (config.method == FitMethod::ConjugateGradient) {
      // Fletcher–Reeves in the preconditioned inner product, vectors moved
      // by projection transport.
      double beta = gp_new / gp;
      if (config.powell_restart &&
          std::abs(inner(g_new, transport(x, p))) >= 0.2 * gp_new) {
        beta = 0.0;
      }
      d = -p_new + beta * transport(x, d);
    } else {
      d = -p_new;
    }
    g = g_new;
    p = p_new;
    gp = gp_new;
    gnorm = gnorm_new;
    if (gnorm <= threshold) result.status = FitStatus::Converged;
  }

  x.sort_components();
  result.point = std::move(x);
  return result;
}

FitResult fit(const SeedFunction& seed, const DiagonalizedBasis& db,
              const SparseDataset& data, int R, double eta,
              const FitConfig& config, unsigned workers) {
  config.validate();
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
  if (data.curves.empty()) throw std::invalid_argument("fit: empty dataset");
  Objective objective(seed, db, make_designs(db, data),
                      Eigen::VectorXd::Constant(R, eta), workers);
  FitResult result;
  if (config.init == InitMethod::Random) {
    result = fit_from(objective,
                      random_point(db.dimension(), R, config.sigma2_init,
                                   config.init_seed),
                      config);
  } else {
    const InitResult init = initialize(db, data, R, config.sigma2_init);
    result = fit_from(objective, init.point, config);
    result.used_fallback_init = init.fallback;
  }
  return result;
}

}  // namespace fpca
