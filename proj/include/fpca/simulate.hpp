#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpca/data.hpp"

namespace fpca {

using ScalarFunction = std::function<double(double)>;

enum class TruthFamily { Fourier, Kinked };
enum class ScoreDistribution { Normal, Uniform };

std::string to_string(TruthFamily f);
std::string to_string(ScoreDistribution s);
TruthFamily truth_family_from_string(const std::string& s);
ScoreDistribution score_distribution_from_string(const std::string& s);

/// Serializable description of a built-in truth.
struct TruthSpec {
  TruthFamily family = TruthFamily::Fourier;
  std::vector<double> eigenvalues{4.0, 1.0};  ///< strictly decreasing, > 0
  double sigma_e = 0.5;
  int M_lo = 4;
  int M_hi = 8;
  ScoreDistribution scores = ScoreDistribution::Normal;
  int smoothness = 2;  ///< Kinked family: Sobolev smoothness p of the truth

  int R() const { return static_cast<int>(eigenvalues.size()); }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Rank-R Karhunen–Loève truth: x(u) = Σ_r √λ_r θ_r ψ_r(u), observed with
/// N(0, σₑ²) noise at M_n i.i.d. times per curve.
struct TrueModel {
  std::vector<ScalarFunction> eigenfunctions;  ///< orthonormal in L2[0, 1]
  std::vector<double> eigenvalues;
  double sigma_e = 0.5;
  int M_lo = 4;
  int M_hi = 8;
  ScoreDistribution scores = ScoreDistribution::Normal;
  /// Density of observation times on [0, 1]; empty means uniform.
  ScalarFunction time_density;
  /// Upper bound of time_density, used for rejection sampling.
  double density_bound = 1.0;
  /// Breakpoints where the eigenfunctions lose smoothness (for quadrature).
  std::vector<double> breakpoints;

  int R() const { return static_cast<int>(eigenvalues.size()); }
  void validate() const;
};

/// √2 cos(2π k u) and √2 sin(2π k u), k = 1, 2, ..., alternating.
std::vector<ScalarFunction> fourier_eigenfunctions(int R);

/// Eigenfunctions of Sobolev smoothness p: Fourier functions perturbed by
/// 3 ((u − c_r)₊ / (1 − c_r))^(p − 1/2) with c_r = 0.5 for even r and 0.25
/// for odd r, orthonormalized by Gram–Schmidt under quadrature. Returns the
/// functions and their kink locations.
std::pair<std::vector<ScalarFunction>, std::vector<double>>
kinked_eigenfunctions(int R, int p);

TrueModel make_true_model(const TruthSpec& spec);

/// Default truth: R = 2, ψ = √2 cos 2πu, √2 sin 2πu, λ = (4, 1), σₑ = 0.5,
/// M ∈ [4, 8], uniform times, normal scores.
TrueModel default_true_model();

/// Draws N curves. Curve n uses its own generator seeded from (seed, n), so
/// the result is reproducible and independent of generation order.
SparseDataset sample_dataset(const TrueModel& tm, int N, std::uint64_t seed);

/// Per-curve generator seed derived from a base seed and a counter.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter);

/// [Σ_r λ_r ψ_r(u_i) ψ_r(u_j)] + σₑ² I.
Eigen::MatrixXd true_cov_matrix(const TrueModel& tm,
                                const std::vector<double>& times);

}  // namespace fpca
