#pragma once

// Independent reference computations used by the unit tests. Nothing here
// calls into the library's numerical routines.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Cox–de Boor recursion for the i-th B-spline of degree m.
inline double bspline(const std::vector<double>& t, int i, int m, double u) {
  if (m == 0) {
    const bool last = u == t.back() && t[i] < t[i + 1] && t[i + 1] == t.back();
    return (t[i] <= u && u < t[i + 1]) || last ? 1.0 : 0.0;
  }
  double a = 0.0, b = 0.0;
  if (t[i + m] > t[i]) a = (u - t[i]) / (t[i + m] - t[i]) * bspline(t, i, m - 1, u);
  if (t[i + m + 1] > t[i + 1]) {
    b = (t[i + m + 1] - u) / (t[i + m + 1] - t[i + 1]) * bspline(t, i + 1, m - 1, u);
  }
  return a + b;
}

/// Composite Simpson rule with `panels` panels on every [breaks[k], breaks[k+1]].
inline double simpson(const std::function<double(double)>& f,
                      const std::vector<double>& breaks, int panels) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    if (!(b > a)) continue;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double x0 = a + p * h;
      // Interior points only, so one-sided values at kinks are never mixed.
      const double x1 = x0 + 0.5 * h, x2 = x0 + h;
      const double e = 1e-13 * h;
      total += h / 6.0 * (f(x0 + e) + 4.0 * f(x1) + f(x2 - e));
    }
  }
  return total;
}

/// Uniform-grid midpoint rule with n points on [0, 1].
inline double midpoint(const std::function<double(double)>& f, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f((i + 0.5) / n);
  return s / n;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = normal(rng);
  return A;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double shift = 0.3) {
  const Eigen::MatrixXd A = random_matrix(rng, n, n);
  Eigen::MatrixXd S = A * A.transpose() / n;
  S.diagonal().array() += shift;
  return 0.5 * (S + S.transpose());
}

inline Eigen::MatrixXd random_orthonormal(std::mt19937_64& rng, int K, int R) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, K, R));
  return qr.householderQ() * Eigen::MatrixXd::Identity(K, R);
}

/// Symmetric matrix function through a fresh eigendecomposition.
inline Eigen::MatrixXd matfun(const Eigen::MatrixXd& A,
                              const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  Eigen::VectorXd v = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().transpose();
}

/// OLS slope and standard error (closed form).
inline std::pair<double, double> ols(const std::vector<double>& x,
                                     const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / n;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - icpt - slope * x[i];
    rss += r * r;
  }
  const double ssx = sxx - sx * sx / n;
  return {slope, std::sqrt(rss / (n - 2) / ssx)};
}

}  // namespace oracle
