#include "fpca/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace fpca {

namespace {

// Legendre polynomial P_n and its derivative at x.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, n == 1 ? 1.0 : dp};
}

}  // namespace

GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Roots are symmetric; Newton from the standard cosine guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    if (n % 2 == 1 && i == n / 2) x = 0.0;
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

GaussRule composite_gauss(const std::vector<double>& breaks,
                          int nodes_per_interval) {
  const GaussRule ref = gauss_legendre(nodes_per_interval);
  GaussRule out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int k = 0; k < nodes_per_interval; ++k) {
      out.nodes.push_back(mid + half * ref.nodes[k]);
      out.weights.push_back(half * ref.weights[k]);
    }
  }
  return out;
}

std::vector<double> graded_breaks(const std::vector<double>& breaks,
                                  const std::vector<double>& points,
                                  int levels) {
  std::vector<double> base = breaks;
  base.insert(base.end(), points.begin(), points.end());
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());
  std::vector<double> out = base;
  for (double c : points) {
    const auto it = std::lower_bound(base.begin(), base.end(), c);
    const std::size_t i = it - base.begin();
    const double left = i > 0 ? c - base[i - 1] : 0.0;
    const double right = i + 1 < base.size() ? base[i + 1] - c : 0.0;
    double scale = 0.5;
    for (int k = 0; k < levels; ++k, scale *= 0.5) {
      if (left > 0.0) out.push_back(c - scale * left);
      if (right > 0.0) out.push_back(c + scale * right);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace fpca
