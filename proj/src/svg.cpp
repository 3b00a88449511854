#include "fpca/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fpca {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
};

Frame padded(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         title + "</text>\n";
}

// Axes with ticks; `label` maps an axis coordinate to tick text.
template <class Label>
std::string axes(const Frame& f, const std::string& xlabel,
                 const std::string& ylabel, Label label) {
  std::string s;
  const double xa = f.px(f.x0), xb = f.px(f.x1);
  const double ya = f.py(f.y0), yb = f.py(f.y1);
  s += "<rect x=\"" + num(xa) + "\" y=\"" + num(yb) + "\" width=\"" + num(xb - xa) +
       "\" height=\"" + num(ya - yb) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(ya + 16) +
         "\" text-anchor=\"middle\">" + label(x) + "</text>\n";
    s += "<text x=\"" + num(xa - 6) + "\" y=\"" + num(f.py(y) + 4) +
         "\" text-anchor=\"end\">" + label(y) + "</text>\n";
  }
  s += "<text x=\"" + num((xa + xb) / 2) + "\" y=\"" + num(kHeight - 12) +
       "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += "<text x=\"16\" y=\"" + num((ya + yb) / 2) +
       "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + num((ya + yb) / 2) +
       ")\">" + ylabel + "</text>\n";
  return s;
}

std::string polyline(const Frame& f, const std::vector<double>& xs,
                     const std::vector<double>& ys, const std::string& color,
                     bool dashed) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + color +
                  "\" stroke-width=\"1.5\"" +
                  (dashed ? " stroke-dasharray=\"6 4\"" : "") + " points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s += num(f.px(xs[i])) + "," + num(f.py(ys[i])) + " ";
  }
  return s + "\"/>\n";
}

std::string legend(int row, const std::string& color, bool dashed,
                   const std::string& text) {
  const double y = kTop + 14 + 16 * row;
  const double x = kWidth - kRight - 170;
  return "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 24) +
         "\" y2=\"" + num(y) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
         (dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n<text x=\"" +
         num(x + 30) + "\" y=\"" + num(y + 4) + "\">" + text + "</text>\n";
}

}  // namespace

std::string eigenfunction_svg(const DiagonalizedBasis& db,
                              const Eigen::MatrixXd& U,
                              const std::vector<ScalarFunction>& truth) {
  constexpr int kGrid = 401;
  std::vector<double> xs(kGrid);
  for (int i = 0; i < kGrid; ++i) xs[i] = i / (kGrid - 1.0);
  std::vector<std::vector<double>> est(U.cols()), tru(truth.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < kGrid; ++i) {
    const Eigen::VectorXd v = U.transpose() * eval_diag(db, xs[i]);
    for (Eigen::Index r = 0; r < U.cols(); ++r) est[r].push_back(v(r));
    for (std::size_t s = 0; s < truth.size(); ++s) tru[s].push_back(truth[s](xs[i]));
  }
  for (const auto& c : est) {
    lo = std::min(lo, *std::min_element(c.begin(), c.end()));
    hi = std::max(hi, *std::max_element(c.begin(), c.end()));
  }
  for (const auto& c : tru) {
    lo = std::min(lo, *std::min_element(c.begin(), c.end()));
    hi = std::max(hi, *std::max_element(c.begin(), c.end()));
  }
  const Frame f = padded(0.0, 1.0, lo, hi);
  std::string s = header("Estimated eigenfunctions");
  s += axes(f, "u", "psi(u)", num);
  int row = 0;
  for (std::size_t r = 0; r < est.size(); ++r) {
    const char* color = kColors[r % 6];
    s += polyline(f, xs, est[r], color, false);
    s += legend(row++, color, false, "estimate " + std::to_string(r + 1));
  }
  for (std::size_t r = 0; r < tru.size(); ++r) {
    const char* color = kColors[r % 6];
    s += polyline(f, xs, tru[r], color, true);
    s += legend(row++, color, true, "truth " + std::to_string(r + 1));
  }
  return s + "</svg>\n";
}

std::string rate_svg(const RateReport& report, int component) {
  if (component < 1 || component > static_cast<int>(report.slopes.size())) {
    throw std::invalid_argument("rate_svg: component out of range");
  }
  std::vector<double> lx, ly;
  for (const CellSummary& c : report.cells) {
    if (!c.valid) continue;
    lx.push_back(std::log10(static_cast<double>(c.N)));
    ly.push_back(std::log10(c.mean_combined[component - 1]));
  }
  if (lx.empty()) throw std::invalid_argument("rate_svg: no valid cells");
  const ComponentSlope& cs = report.slopes[component - 1];
  const double ln10 = std::log(10.0);
  // Fitted natural-log line expressed in log10 coordinates.
  auto fitted = [&](double x) {
    return (cs.fit.intercept + cs.fit.slope * x * ln10) / ln10;
  };
  const double xm = (lx.front() + lx.back()) / 2;
  const double ym = cs.points >= 2 ? fitted(xm) : ly.front();
  auto reference = [&](double x) {
    return ym + report.spec.expected_slope * (x - xm);
  };
  const std::vector<double> ends{lx.front(), lx.back()};
  double lo = *std::min_element(ly.begin(), ly.end());
  double hi = *std::max_element(ly.begin(), ly.end());
  for (double x : ends) {
    lo = std::min({lo, reference(x), cs.points >= 2 ? fitted(x) : lo});
    hi = std::max({hi, reference(x), cs.points >= 2 ? fitted(x) : hi});
  }
  const double xpad = 0.05 * std::max(lx.back() - lx.front(), 0.1);
  const Frame f = padded(lx.front() - xpad, lx.back() + xpad, lo, hi);
  std::string s = header("Scenario " + report.spec.name + ", component " +
                         std::to_string(component));
  s += axes(f, "N", "mean combined error",
            [](double v) { return num(std::pow(10.0, v)); });
  for (std::size_t i = 0; i < lx.size(); ++i) {
    s += "<circle cx=\"" + num(f.px(lx[i])) + "\" cy=\"" + num(f.py(ly[i])) +
         "\" r=\"4\" fill=\"" + kColors[0] + "\"/>\n";
  }
  int row = 0;
  if (cs.points >= 2) {
    s += polyline(f, ends, {fitted(ends[0]), fitted(ends[1])}, kColors[0], false);
    s += legend(row++, kColors[0], false, "fit, slope " + num(cs.fit.slope));
  }
  s += polyline(f, ends, {reference(ends[0]), reference(ends[1])}, kColors[1], true);
  s += legend(row++, kColors[1], true,
              "reference, slope " + num(report.spec.expected_slope));
  return s + "</svg>\n";
}

}  // namespace fpca
