#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpca/optimizer.hpp"
#include "fpca/simulate.hpp"
#include "fpca/stats.hpp"

namespace fpca {

/// One Monte Carlo rate study: K(N) = ⌈k_const · N^k_power⌉ and
/// eta(N) = eta_const · N^(−eta_power).
struct ScenarioSpec {
  std::string name = "custom";
  int q = 2;
  int m = 3;
  TruthSpec truth;
  double k_const = 35.0;
  double k_power = 0.0;
  double eta_const = 0.5;
  double eta_power = 0.8;
  std::vector<int> N_grid{250, 500, 1000, 2000, 4000};
  int replicates = 20;
  std::uint64_t seed = 1;
  double expected_slope = -0.8;
  double slope_tolerance = 0.2;
  std::string divergence = "frobenius";
  FitConfig fit;

  int K_at(int N) const;
  double eta_at(int N) const;

  /// Effective smoothness of the truth (infinite for the Fourier family).
  double truth_smoothness() const;

  /// Throws std::invalid_argument naming the offending field, including the
  /// K(N) >= m + 1 precondition on every grid point.
  void validate() const;
};

/// Spline dimensions used to validate the smoothness of a kinked truth. Its
/// approximation-error slope must lie within 0.3 of −min(p, m + 1).
const std::vector<int>& smoothness_grid();

/// Names accepted by scenario_preset.
const std::vector<std::string>& scenario_names();

/// Built-in scenario by name (I.1, I.2, I.3, II.1, II.2, III.1, III.2).
/// Throws std::invalid_argument listing the valid names otherwise.
ScenarioSpec scenario_preset(const std::string& name);

/// Reduced grid (N ≤ 1000) with 10 replicates.
ScenarioSpec fast_variant(ScenarioSpec spec);

struct ErrorRecord {
  int N = 0;
  int replicate = 0;
  int component = 0;  ///< 1-based
  double combined = 0.0;
  double l2 = 0.0;
};

struct CellSummary {
  int N = 0;
  int K = 0;
  double eta = 0.0;
  int fits = 0;
  int failures = 0;  ///< line-search failures, excluded from the means
  bool valid = true;
  std::vector<double> mean_combined;  ///< per component
  std::vector<double> mean_l2;
};

struct ComponentSlope {
  int component = 0;  ///< 1-based
  SlopeFit fit;
  int points = 0;
  bool pass = false;
};

struct SmoothnessCheck {
  bool performed = false;
  std::vector<double> slopes;  ///< approximation-error decay per eigenfunction
  double expected = 0.0;
  bool pass = true;
};

struct RateReport {
  ScenarioSpec spec;
  std::vector<ErrorRecord> records;
  std::vector<CellSummary> cells;
  std::vector<ComponentSlope> slopes;
  SmoothnessCheck smoothness;
  std::vector<std::string> warnings;
  bool advisory = false;  ///< truth failed its smoothness validation
  bool pass = false;      ///< component 1 slope within tolerance
  bool monotone = false;  ///< mean combined error at N_max below N_min, all components
};

/// Progress hook: (completed fits, total fits).
using ProgressFn = std::function<void(int, int)>;

/// Simulates, fits and aligns every (N, replicate) cell and fits log-log
/// slopes of the mean combined error per component. Datasets depend only on
/// (seed, N, replicate). Results do not depend on `workers`.
RateReport run_scenario(const ScenarioSpec& spec, unsigned workers = 1,
                        const ProgressFn& progress = {});

}  // namespace fpca
