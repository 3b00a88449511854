#include "fpca/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fpca/quadrature.hpp"

namespace fpca {

std::string to_string(TruthFamily f) {
  return f == TruthFamily::Fourier ? "fourier" : "kinked";
}

std::string to_string(ScoreDistribution s) {
  return s == ScoreDistribution::Normal ? "normal" : "uniform";
}

TruthFamily truth_family_from_string(const std::string& s) {
  if (s == "fourier") return TruthFamily::Fourier;
  if (s == "kinked") return TruthFamily::Kinked;
  throw std::invalid_argument("unknown truth family '" + s +
                              "' (expected fourier or kinked)");
}

ScoreDistribution score_distribution_from_string(const std::string& s) {
  if (s == "normal") return ScoreDistribution::Normal;
  if (s == "uniform") return ScoreDistribution::Uniform;
  throw std::invalid_argument("unknown score distribution '" + s +
                              "' (expected normal or uniform)");
}

namespace {

void validate_common(const std::vector<double>& eigenvalues, double sigma_e,
                     int M_lo, int M_hi) {
  if (eigenvalues.empty()) {
    throw std::invalid_argument("eigenvalues: need at least one component");
  }
  for (std::size_t r = 0; r < eigenvalues.size(); ++r) {
    if (!(eigenvalues[r] > 0.0)) {
      throw std::invalid_argument("eigenvalues: must be positive");
    }
    if (r > 0 && !(eigenvalues[r] < eigenvalues[r - 1])) {
      throw std::invalid_argument("eigenvalues: must be strictly decreasing");
    }
  }
  if (!(sigma_e >= 0.0) || !std::isfinite(sigma_e)) {
    throw std::invalid_argument("sigma_e: must be >= 0");
  }
  if (M_lo < 1) throw std::invalid_argument("m_lo: must be >= 1");
  if (M_hi < M_lo) throw std::invalid_argument("m_hi: must be >= m_lo");
}

}  // namespace

void TruthSpec::validate() const {
  validate_common(eigenvalues, sigma_e, M_lo, M_hi);
  if (family == TruthFamily::Kinked && smoothness < 1) {
    throw std::invalid_argument("smoothness: must be >= 1");
  }
}

void TrueModel::validate() const {
  validate_common(eigenvalues, sigma_e, M_lo, M_hi);
  if (eigenfunctions.size() != eigenvalues.size()) {
    throw std::invalid_argument("eigenfunctions: one per eigenvalue required");
  }
  if (time_density && !(density_bound > 0.0)) {
    throw std::invalid_argument("density_bound: must be positive");
  }
}

std::vector<ScalarFunction> fourier_eigenfunctions(int R) {
  std::vector<ScalarFunction> out;
  for (int r = 0; r < R; ++r) {
    const double freq = 2.0 * std::numbers::pi * (r / 2 + 1);
    if (r % 2 == 0) {
      out.emplace_back([freq](double u) { return std::sqrt(2.0) * std::cos(freq * u); });
    } else {
      out.emplace_back([freq](double u) { return std::sqrt(2.0) * std::sin(freq * u); });
    }
  }
  return out;
}

std::pair<std::vector<ScalarFunction>, std::vector<double>>
kinked_eigenfunctions(int R, int p) {
  if (p < 1) throw std::invalid_argument("kinked truth: p must be >= 1");
  const auto smooth = fourier_eigenfunctions(R);
  std::vector<double> kinks;
  std::vector<ScalarFunction> raw;
  for (int r = 0; r < R; ++r) {
    const double c = r % 2 == 0 ? 0.5 : 0.25;
    kinks.push_back(c);
    const auto base = smooth[r];
    raw.emplace_back([base, c, p](double u) {
      const double s = u > c ? (u - c) / (1.0 - c) : 0.0;
      return base(u) + 3.0 * std::pow(s, p - 0.5);
    });
  }
  std::vector<double> uniform;
  for (int k = 0; k <= 32; ++k) uniform.push_back(k / 32.0);
  const std::vector<double> fine = graded_breaks(uniform, kinks);
  const GaussRule rule = composite_gauss(fine, 24);

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(R, R);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    Eigen::VectorXd v(R);
    for (int r = 0; r < R; ++r) v(r) = raw[r](rule.nodes[i]);
    gram.noalias() += rule.weights[i] * v * v.transpose();
  }
  // Gram–Schmidt in matrix form: ψ = L⁻¹ f with gram = L Lᵀ.
  const Eigen::MatrixXd L = gram.llt().matrixL();
  const Eigen::MatrixXd A =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(R, R));
  std::vector<ScalarFunction> out;
  for (int r = 0; r < R; ++r) {
    Eigen::VectorXd coef = A.row(r).transpose();
    out.emplace_back([raw, coef](double u) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < coef.size(); ++k) {
        if (coef(k) != 0.0) s += coef(k) * raw[k](u);
      }
      return s;
    });
  }
  return {out, kinks};
}

TrueModel make_true_model(const TruthSpec& spec) {
  spec.validate();
  TrueModel tm;
  if (spec.family == TruthFamily::Fourier) {
    tm.eigenfunctions = fourier_eigenfunctions(spec.R());
  } else {
    auto [fns, kinks] = kinked_eigenfunctions(spec.R(), spec.smoothness);
    tm.eigenfunctions = std::move(fns);
    tm.breakpoints = std::move(kinks);
  }
  tm.eigenvalues = spec.eigenvalues;
  tm.sigma_e = spec.sigma_e;
  tm.M_lo = spec.M_lo;
  tm.M_hi = spec.M_hi;
  tm.scores = spec.scores;
  return tm;
}

TrueModel default_true_model() { return make_true_model(TruthSpec{}); }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter) {
  // splitmix64 finalizer over a counter-offset state
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SparseDataset sample_dataset(const TrueModel& tm, int N, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("sample_dataset: N must be >= 1");
  tm.validate();
  SparseDataset data;
  data.seed = seed;
  data.curves.resize(N);
  const int R = tm.R();
  std::vector<double> root_lambda(R);
  for (int r = 0; r < R; ++r) root_lambda[r] = std::sqrt(tm.eigenvalues[r]);

  for (int n = 0; n < N; ++n) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
    std::uniform_int_distribution<int> count(tm.M_lo, tm.M_hi);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double half_width = std::sqrt(3.0);
    std::uniform_real_distribution<double> unif_score(-half_width, half_width);

    Curve& c = data.curves[n];
    const int M = count(rng);
    c.times.resize(M);
    for (int j = 0; j < M; ++j) {
      if (!tm.time_density) {
        c.times[j] = unif(rng);
      } else {
        for (;;) {
          const double u = unif(rng);
          if (unif(rng) * tm.density_bound <= tm.time_density(u)) {
            c.times[j] = u;
            break;
          }
        }
      }
    }
    std::vector<double> theta(R);
    for (int r = 0; r < R; ++r) {
      theta[r] = tm.scores == ScoreDistribution::Normal ? normal(rng)
                                                        : unif_score(rng);
    }
    c.values.resize(M);
    for (int j = 0; j < M; ++j) {
      double y = 0.0;
      for (int r = 0; r < R; ++r) {
        y += root_lambda[r] * theta[r] * tm.eigenfunctions[r](c.times[j]);
      }
      c.values[j] = y + tm.sigma_e * normal(rng);
    }
  }
  return data;
}

Eigen::MatrixXd true_cov_matrix(const TrueModel& tm,
                                const std::vector<double>& times) {
  const int M = static_cast<int>(times.size());
  const int R = tm.R();
  Eigen::MatrixXd Psi(M, R);
  for (int j = 0; j < M; ++j)
    for (int r = 0; r < R; ++r) Psi(j, r) = tm.eigenfunctions[r](times[j]);
  const Eigen::VectorXd lam =
      Eigen::Map<const Eigen::VectorXd>(tm.eigenvalues.data(), R);
  Eigen::MatrixXd K = Psi * lam.asDiagonal() * Psi.transpose();
  K.diagonal().array() += tm.sigma_e * tm.sigma_e;
  return K;
}

}  // namespace fpca
