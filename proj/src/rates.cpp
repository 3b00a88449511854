#include "fpca/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "fpca/eval.hpp"
#include "fpca/parallel.hpp"

namespace fpca {

int ScenarioSpec::K_at(int N) const {
  return static_cast<int>(std::ceil(k_const * std::pow(N, k_power) - 1e-9));
}

double ScenarioSpec::eta_at(int N) const {
  return eta_const * std::pow(N, -eta_power);
}

double ScenarioSpec::truth_smoothness() const {
  return truth.family == TruthFamily::Fourier
             ? std::numeric_limits<double>::infinity()
             : static_cast<double>(truth.smoothness);
}

void ScenarioSpec::validate() const {
  truth.validate();
  if (m < 1) throw std::invalid_argument("m: must be >= 1");
  if (q < 1 || q > m) throw std::invalid_argument("q: must satisfy 1 <= q <= m");
  if (!(k_const > 0.0)) throw std::invalid_argument("k_const: must be positive");
  if (!(eta_const >= 0.0)) throw std::invalid_argument("eta_const: must be >= 0");
  if (N_grid.size() < 4) {
    throw std::invalid_argument("N_grid: need at least 4 sample sizes");
  }
  for (std::size_t i = 0; i < N_grid.size(); ++i) {
    if (N_grid[i] < 1) throw std::invalid_argument("N_grid: entries must be >= 1");
    if (i > 0 && N_grid[i] <= N_grid[i - 1]) {
      throw std::invalid_argument("N_grid: must be strictly increasing");
    }
  }
  if (replicates < 10) throw std::invalid_argument("replicates: must be >= 10");
  if (!(slope_tolerance > 0.0)) {
    throw std::invalid_argument("slope_tolerance: must be positive");
  }
  for (int N : N_grid) {
    if (K_at(N) < m + 1) {
      throw std::invalid_argument("K(N): K(" + std::to_string(N) + ") = " +
                                  std::to_string(K_at(N)) + " is below m + 1 = " +
                                  std::to_string(m + 1));
    }
    if (K_at(N) < truth.R()) {
      throw std::invalid_argument("K(N): smaller than the number of components");
    }
  }
  SeedFunction::from_name(divergence);
  fit.validate();
}

const std::vector<int>& smoothness_grid() {
  static const std::vector<int> grid{16, 24, 32, 48, 64, 96, 128};
  return grid;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"I.1",  "I.2",   "I.3",  "II.1",
                                              "II.2", "III.1", "III.2"};
  return names;
}

ScenarioSpec scenario_preset(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  auto rate = [](double p) { return -2.0 * p / (2.0 * p + 1.0); };
  const double zeta = s.m + 1;  // smooth truth saturates at m + 1
  if (name == "I.1") {
    s.k_const = 1.5;
    s.k_power = 1.0 / (2.0 * zeta + 1.0);
    s.eta_const = 0.0;
    s.expected_slope = rate(zeta);
  } else if (name == "I.2") {
    s.k_const = 4.0;
    s.k_power = 1.0 / (2.0 * zeta + 1.0);
    s.eta_const = 1.0;
    s.eta_power = 2.0 * zeta / (2.0 * zeta + 1.0);
    s.expected_slope = rate(zeta);
  } else if (name == "I.3") {
    s.k_const = 35.0;
    s.k_power = 0.0;
    s.eta_const = 0.5;
    s.eta_power = 2.0 * s.q / (2.0 * s.q + 1.0);
    s.expected_slope = rate(s.q);
  } else if (name == "II.1" || name == "II.2" || name == "III.1" ||
             name == "III.2") {
    const int p = name.rfind("II.", 0) == 0 ? s.q : 1;
    s.truth.family = TruthFamily::Kinked;
    s.truth.smoothness = p;
    s.expected_slope = rate(p);
    if (name == "II.1" || name == "III.1") {
      s.k_const = 2.0;
      s.k_power = 1.0 / (2.0 * p + 1.0);
      s.eta_const = 0.0;
    } else if (name == "II.2") {
      s.k_const = 35.0;
      s.k_power = 0.0;
      s.eta_const = 0.5;
      s.eta_power = 2.0 * p / (2.0 * p + 1.0);
    } else {
      // K ≍ eta^(−1/(2q)) with eta ≍ N^(−2q/(2p+1)).
      s.k_const = 2.0;
      s.k_power = 1.0 / (2.0 * p + 1.0);
      s.eta_const = 1.0;
      s.eta_power = 2.0 * s.q / (2.0 * p + 1.0);
    }
  } else {
    std::ostringstream msg;
    msg << "unknown scenario '" << name << "' (valid:";
    for (const auto& n : scenario_names()) msg << ' ' << n;
    msg << ')';
    throw std::invalid_argument(msg.str());
  }
  return s;
}

ScenarioSpec fast_variant(ScenarioSpec spec) {
  spec.N_grid = {250, 400, 630, 1000};
  spec.replicates = 10;
  return spec;
}

namespace {

SmoothnessCheck check_smoothness(const ScenarioSpec& spec, const TrueModel& tm) {
  SmoothnessCheck out;
  if (spec.truth.family == TruthFamily::Fourier) return out;
  out.performed = true;
  out.expected = -std::min(spec.truth_smoothness(), spec.m + 1.0);
  for (const auto& f : tm.eigenfunctions) {
    const ApproxDecay d = spline_approx_error(smoothness_grid(), spec.m, spec.q,
                                              f, tm.breakpoints);
    out.slopes.push_back(d.fit.slope);
    if (std::abs(d.fit.slope - out.expected) > 0.3) out.pass = false;
  }
  return out;
}

struct FitOutcome {
  bool failed = false;
  std::vector<double> combined;
  std::vector<double> l2;
};

}  // namespace

RateReport run_scenario(const ScenarioSpec& spec, unsigned workers,
                        const ProgressFn& progress) {
  spec.validate();
  RateReport report;
  report.spec = spec;
  const TrueModel tm = make_true_model(spec.truth);
  const SeedFunction seed_fn = SeedFunction::from_name(spec.divergence);
  const int R = tm.R();

  report.smoothness = check_smoothness(spec, tm);
  report.advisory = !report.smoothness.pass;
  if (report.advisory) {
    report.warnings.push_back(
        "truth failed its smoothness validation; scenario is advisory");
  }

  const std::size_t n_cells = spec.N_grid.size();
  std::vector<DiagonalizedBasis> bases(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const int N = spec.N_grid[c];
    const int K = spec.K_at(N);
    bases[c] = make_basis(K, spec.m, spec.q);
    const double k = K;
    if (k * k * std::log(k) > N / 4.0) {
      report.warnings.push_back("K^2 log K > N/4 at N = " + std::to_string(N) +
                                " (K = " + std::to_string(K) + ")");
    }
  }

  const std::size_t reps = static_cast<std::size_t>(spec.replicates);
  const std::size_t total = n_cells * reps;
  std::vector<FitOutcome> outcomes(total);
  std::mutex progress_mutex;
  int done = 0;
  parallel_for(total, workers, [&](std::size_t item) {
    const std::size_t c = item / reps;
    const std::size_t rep = item % reps;
    const int N = spec.N_grid[c];
    const double eta = spec.eta_at(N);
    const std::uint64_t data_seed =
        derive_seed(derive_seed(spec.seed, static_cast<std::uint64_t>(N)), rep);
    const SparseDataset data = sample_dataset(tm, N, data_seed);
    const FitResult fr = fit(seed_fn, bases[c], data, R, eta, spec.fit, 1);
    FitOutcome& out = outcomes[item];
    if (fr.status == FitStatus::LineSearchFailure) {
      out.failed = true;
    } else {
      const AlignedError ae =
          align(bases[c], fr.point.U, tm.eigenfunctions, eta, tm.breakpoints);
      for (const auto& ce : ae.components) {
        out.combined.push_back(ce.combined);
        out.l2.push_back(ce.l2_sq_error);
      }
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, static_cast<int>(total));
    }
  });

  std::vector<double> log_n;
  std::vector<std::vector<double>> log_err(R);
  for (std::size_t c = 0; c < n_cells; ++c) {
    CellSummary cell;
    cell.N = spec.N_grid[c];
    cell.K = spec.K_at(cell.N);
    cell.eta = spec.eta_at(cell.N);
    cell.mean_combined.assign(R, 0.0);
    cell.mean_l2.assign(R, 0.0);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const FitOutcome& out = outcomes[c * reps + rep];
      ++cell.fits;
      if (out.failed) {
        ++cell.failures;
        continue;
      }
      for (int r = 0; r < R; ++r) {
        report.records.push_back({cell.N, static_cast<int>(rep), r + 1,
                                  out.combined[r], out.l2[r]});
        cell.mean_combined[r] += out.combined[r];
        cell.mean_l2[r] += out.l2[r];
      }
    }
    const int ok = cell.fits - cell.failures;
    cell.valid = ok > 0 && cell.failures <= 0.2 * cell.fits;
    for (int r = 0; r < R; ++r) {
      cell.mean_combined[r] = ok > 0 ? cell.mean_combined[r] / ok : 0.0;
      cell.mean_l2[r] = ok > 0 ? cell.mean_l2[r] / ok : 0.0;
    }
    if (cell.failures > 0) {
      report.warnings.push_back(std::to_string(cell.failures) +
                                " line-search failures at N = " +
                                std::to_string(cell.N));
    }
    if (!cell.valid) {
      report.warnings.push_back("cell N = " + std::to_string(cell.N) +
                                " invalidated by failures");
    } else {
      log_n.push_back(std::log(static_cast<double>(cell.N)));
      for (int r = 0; r < R; ++r) {
        log_err[r].push_back(std::log(cell.mean_combined[r]));
      }
    }
    report.cells.push_back(std::move(cell));
  }

  for (int r = 0; r < R; ++r) {
    ComponentSlope cs;
    cs.component = r + 1;
    cs.points = static_cast<int>(log_n.size());
    if (cs.points >= 4) {
      cs.fit = fit_slope(log_n, log_err[r]);
      cs.pass = std::abs(cs.fit.slope - spec.expected_slope) <= spec.slope_tolerance;
    }
    report.slopes.push_back(cs);
  }
  report.pass = report.slopes.front().pass;

  const CellSummary& first = report.cells.front();
  const CellSummary& last = report.cells.back();
  report.monotone = first.valid && last.valid;
  for (int r = 0; r < R && report.monotone; ++r) {
    report.monotone = last.mean_combined[r] < first.mean_combined[r];
  }
  return report;
}

}  // namespace fpca
