#include "fpca/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace fpca {

namespace {

Eigen::MatrixXd basis_at(const DiagonalizedBasis& db, const GaussRule& rule) {
  Eigen::MatrixXd B(rule.nodes.size(), db.dimension());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    B.row(i) = eval_diag(db, rule.nodes[i]).transpose();
  }
  return B;
}

Eigen::VectorXd values_at(const ScalarFunction& f, const GaussRule& rule) {
  Eigen::VectorXd v(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) v(i) = f(rule.nodes[i]);
  return v;
}

Eigen::VectorXd weights_of(const GaussRule& rule) {
  return Eigen::Map<const Eigen::VectorXd>(rule.weights.data(),
                                           rule.weights.size());
}

}  // namespace

QuadraticForms v_and_j(const DiagonalizedBasis& db, const Eigen::VectorXd& coef) {
  if (coef.size() != db.dimension()) {
    throw std::invalid_argument("v_and_j: coefficient length must equal K");
  }
  return {coef.squaredNorm(), db.gamma().dot(coef.cwiseAbs2())};
}

double norm_eta(const DiagonalizedBasis& db, const Eigen::MatrixXd& A,
                double eta) {
  if (A.rows() != db.dimension()) {
    throw std::invalid_argument("norm_eta: row count must equal K");
  }
  if (!(eta >= 0.0)) throw std::invalid_argument("norm_eta: eta must be >= 0");
  const double rough = (db.gamma().asDiagonal() * A.cwiseAbs2()).sum();
  return std::sqrt(A.squaredNorm() + eta * rough);
}

GaussRule l2_rule(const DiagonalizedBasis& db,
                  const std::vector<double>& extra_breaks) {
  const std::vector<double> breaks = db.knots().breakpoints();
  if (extra_breaks.empty()) return composite_gauss(breaks, 64);
  return composite_gauss(graded_breaks(breaks, extra_breaks), 64);
}

AlignedError align(const DiagonalizedBasis& db, const Eigen::MatrixXd& coef,
                   const std::vector<ScalarFunction>& truth, double eta,
                   const std::vector<double>& extra_breaks) {
  const int R = static_cast<int>(coef.cols());
  const int S = static_cast<int>(truth.size());
  if (coef.rows() != db.dimension()) {
    throw std::invalid_argument("align: coefficient rows must equal K");
  }
  if (R > S) {
    throw std::invalid_argument("align: more estimated components than truth functions");
  }
  if (!(eta >= 0.0)) throw std::invalid_argument("align: eta must be >= 0");

  const GaussRule rule = l2_rule(db, extra_breaks);
  const Eigen::VectorXd w = weights_of(rule);
  const Eigen::MatrixXd est = basis_at(db, rule) * coef;  // nodes × R
  Eigen::MatrixXd tru(rule.nodes.size(), S);
  for (int s = 0; s < S; ++s) tru.col(s) = values_at(truth[s], rule);
  const Eigen::MatrixXd inner = est.transpose() * w.asDiagonal() * tru;

  AlignedError out;
  out.components.resize(R);
  std::vector<bool> est_used(R, false), tru_used(S, false);
  for (int step = 0; step < R; ++step) {
    int best_r = -1, best_s = -1;
    double best = -1.0;
    for (int r = 0; r < R; ++r) {
      if (est_used[r]) continue;
      for (int s = 0; s < S; ++s) {
        if (!tru_used[s] && std::abs(inner(r, s)) > best) {
          best = std::abs(inner(r, s));
          best_r = r;
          best_s = s;
        }
      }
    }
    est_used[best_r] = true;
    tru_used[best_s] = true;
    ComponentError& ce = out.components[best_r];
    ce.truth_index = best_s;
    ce.sign = inner(best_r, best_s) < 0.0 ? -1 : 1;
    const Eigen::VectorXd diff = ce.sign * est.col(best_r) - tru.col(best_s);
    ce.l2_sq_error = w.dot(diff.cwiseAbs2());
    ce.J_value = v_and_j(db, coef.col(best_r)).J;
    ce.eta_J = eta * ce.J_value;
    ce.combined = ce.l2_sq_error + ce.eta_J;
  }
  return out;
}

double empirical_norm_sq(const std::vector<CurveDesign>& designs,
                         const Eigen::MatrixXd& W1, const Eigen::MatrixXd& W2) {
  if (designs.empty()) throw std::invalid_argument("empirical_norm_sq: no curves");
  if (W1.rows() != W2.rows() || W1.cols() != W2.cols()) {
    throw std::invalid_argument("empirical_norm_sq: dimension mismatch");
  }
  const Eigen::MatrixXd D = W1 - W2;
  double total = 0.0;
  for (const CurveDesign& cd : designs) {
    if (cd.B.cols() != D.rows()) {
      throw std::invalid_argument("empirical_norm_sq: basis dimension mismatch");
    }
    const double m2 = static_cast<double>(cd.M) * cd.M;
    total += (cd.B * D * cd.B.transpose()).squaredNorm() / m2;
  }
  return total / static_cast<double>(designs.size());
}

Eigen::VectorXd project_function(const DiagonalizedBasis& db,
                                 const ScalarFunction& f,
                                 const std::vector<double>& extra_breaks) {
  const GaussRule rule = l2_rule(db, extra_breaks);
  return basis_at(db, rule).transpose() *
         weights_of(rule).cwiseProduct(values_at(f, rule));
}

double best_approx_error(const DiagonalizedBasis& db, const ScalarFunction& f,
                         const std::vector<double>& extra_breaks) {
  const GaussRule rule = l2_rule(db, extra_breaks);
  const Eigen::MatrixXd B = basis_at(db, rule);
  const Eigen::VectorXd w = weights_of(rule);
  const Eigen::VectorXd fv = values_at(f, rule);
  const Eigen::VectorXd c = B.transpose() * w.cwiseProduct(fv);
  const Eigen::VectorXd resid = fv - B * c;
  return std::sqrt(w.dot(resid.cwiseAbs2()));
}

ApproxDecay spline_approx_error(const std::vector<int>& K_grid, int m, int q,
                                const ScalarFunction& f,
                                const std::vector<double>& extra_breaks) {
  if (K_grid.size() < 2) {
    throw std::invalid_argument("spline_approx_error: need at least two K values");
  }
  ApproxDecay out;
  std::vector<double> xs, ys;
  for (int K : K_grid) {
    const DiagonalizedBasis db = make_basis(K, m, q);
    const double e = best_approx_error(db, f, extra_breaks);
    out.K.push_back(K);
    out.error.push_back(e);
    xs.push_back(std::log(static_cast<double>(K)));
    ys.push_back(std::log(e));
  }
  out.fit = fit_slope(xs, ys);
  return out;
}

}  // namespace fpca
