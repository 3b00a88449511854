// fpca: simulate sparse functional data, fit penalized spline FPCA, run rate
// sweeps and the invariant checks.
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "fpca/check.hpp"
#include "fpca/eval.hpp"
#include "fpca/io.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/parallel.hpp"
#include "fpca/rates.hpp"
#include "fpca/simulate.hpp"
#include "fpca/svg.hpp"

namespace fs = std::filesystem;
using namespace fpca;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::string config_path;
  json config = json::object();
};

struct SimulateOptions {
  int n = 500;
  std::string out = "data.csv";
  TruthSpec truth;
};

struct ModelOptions {
  int K = 20;
  int m = 3;
  int q = 2;
  double eta = 1e-4;
  int R = 0;  // 0: from the truth sidecar, else 2
  std::string divergence = "frobenius";
};

struct FitOptions {
  std::string data;
  std::string out = "fit.json";
  std::string svg;
  std::string truth;
  ModelOptions model;
  FitConfig config;
};

struct SweepOptions {
  std::string scenario;
  bool fast = false;
  std::string out_dir = ".";
  bool quiet = false;
};

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(where + "." + key + ": wrong type");
  }
}

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  if (!j.is_object()) throw UsageError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw UsageError(where + ": unknown key '" + key + "'");
  }
}

std::uint64_t resolve_seed(const GlobalOptions& g) {
  if (g.seed) return *g.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << "\n";
  return s;
}

unsigned resolve_workers(const GlobalOptions& g) {
  return g.workers == 0 ? default_workers() : g.workers;
}

// Flags given on the command line win over the config file.
bool given(const CLI::App& app, const std::string& name) {
  return app.count(name) > 0;
}

int cmd_simulate(const CLI::App& app, const GlobalOptions& g, SimulateOptions o) {
  TruthSpec truth = o.truth;
  if (g.config.contains("truth")) {
    const TruthSpec file = truth_from_json(g.config.at("truth"));
    if (!given(app, "--family")) truth.family = file.family;
    if (!given(app, "--eigenvalues")) truth.eigenvalues = file.eigenvalues;
    if (!given(app, "--sigma-e")) truth.sigma_e = file.sigma_e;
    if (!given(app, "--m-lo")) truth.M_lo = file.M_lo;
    if (!given(app, "--m-hi")) truth.M_hi = file.M_hi;
    if (!given(app, "--scores")) truth.scores = file.scores;
    if (!given(app, "--smoothness")) truth.smoothness = file.smoothness;
  }
  if (!given(app, "--n")) take(g.config, "n", o.n, "config");
  if (o.n < 1) throw UsageError("n: must be >= 1");
  truth.validate();
  const std::uint64_t seed = resolve_seed(g);
  const SparseDataset data = sample_dataset(make_true_model(truth), o.n, seed);
  write_dataset_csv(o.out, data);
  write_sidecar(sidecar_path(o.out), {truth, seed, o.n});
  std::cout << "wrote " << data.observation_count() << " observations from "
            << o.n << " curves to " << o.out << "\n";
  return 0;
}

void apply_model_config(const CLI::App& app, const json& j, ModelOptions& m) {
  reject_unknown_keys(j, {"K", "m", "q", "eta", "R", "divergence"}, "model");
  if (!given(app, "--K")) take(j, "K", m.K, "model");
  if (!given(app, "--m")) take(j, "m", m.m, "model");
  if (!given(app, "--q")) take(j, "q", m.q, "model");
  if (!given(app, "--eta")) take(j, "eta", m.eta, "model");
  if (!given(app, "--R")) take(j, "R", m.R, "model");
  if (!given(app, "--divergence")) take(j, "divergence", m.divergence, "model");
}

int cmd_fit(const CLI::App& app, const GlobalOptions& g, FitOptions o) {
  if (g.config.contains("model")) apply_model_config(app, g.config.at("model"), o.model);
  if (g.config.contains("fit")) {
    const FitConfig file = fit_config_from_json(g.config.at("fit"));
    if (!given(app, "--method")) o.config.method = file.method;
    if (!given(app, "--max-iters")) o.config.max_iters = file.max_iters;
    if (!given(app, "--grad-tol")) o.config.grad_tol = file.grad_tol;
    if (!given(app, "--retraction")) o.config.retraction = file.retraction;
    if (!given(app, "--init")) o.config.init = file.init;
    o.config.armijo = file.armijo;
    o.config.sigma2_init = file.sigma2_init;
    o.config.init_seed = file.init_seed;
    o.config.precondition = file.precondition;
    o.config.powell_restart = file.powell_restart;
    o.config.bounds = file.bounds;
  }
  if (o.data.empty()) throw UsageError("--data is required");
  if (!(o.model.eta >= 0.0)) throw UsageError("eta: must be >= 0");
  const SeedFunction seed_fn = SeedFunction::from_name(o.model.divergence);
  const SparseDataset data = read_dataset_csv(o.data);

  std::optional<DatasetSidecar> meta =
      read_sidecar(o.truth.empty() ? sidecar_path(o.data) : fs::path(o.truth));
  if (!o.truth.empty() && !meta) throw UsageError("cannot open '" + o.truth + "'");
  int R = o.model.R;
  if (R == 0) R = meta ? meta->truth.R() : 2;
  if (R < 1 || R > o.model.K) throw UsageError("R: must satisfy 1 <= R <= K");

  const bool seed_in_file = g.config.contains("fit") && g.config.at("fit").contains("init_seed");
  if (g.seed || !seed_in_file) o.config.init_seed = resolve_seed(g);
  o.config.validate();
  const DiagonalizedBasis db = make_basis(o.model.K, o.model.m, o.model.q);
  FitSummary summary;
  summary.K = o.model.K;
  summary.m = o.model.m;
  summary.q = o.model.q;
  summary.eta = o.model.eta;
  summary.divergence = seed_fn.name();
  summary.result =
      fit(seed_fn, db, data, R, o.model.eta, o.config, resolve_workers(g));

  std::vector<ScalarFunction> truth_fns;
  if (meta) {
    const TrueModel tm = make_true_model(meta->truth);
    truth_fns = tm.eigenfunctions;
    if (R <= tm.R()) {
      summary.evaluation = align(db, summary.result.point.U, tm.eigenfunctions,
                                 o.model.eta, tm.breakpoints);
    }
  }
  write_text(o.out, fit_to_json(summary).dump(2) + "\n");
  if (!o.svg.empty()) {
    // Flip estimated signs to match the truth when it is known.
    Eigen::MatrixXd U = summary.result.point.U;
    std::vector<ScalarFunction> shown;
    if (summary.evaluation) {
      for (std::size_t r = 0; r < summary.evaluation->components.size(); ++r) {
        const ComponentError& c = summary.evaluation->components[r];
        U.col(r) *= c.sign;
        shown.push_back(truth_fns[c.truth_index]);
      }
    }
    write_text(o.svg, eigenfunction_svg(db, U, shown));
  }
  const FitResult& fr = summary.result;
  std::cout << "status " << to_string(fr.status) << " after " << fr.iterations
            << " iterations, objective " << fr.loss_trace.back() << "\n";
  if (summary.evaluation) {
    for (std::size_t r = 0; r < summary.evaluation->components.size(); ++r) {
      const ComponentError& c = summary.evaluation->components[r];
      std::cout << "component " << r + 1 << ": L2 squared error "
                << c.l2_sq_error << ", combined " << c.combined << "\n";
    }
  }
  return fr.status == FitStatus::LineSearchFailure ? 1 : 0;
}

int cmd_sweep(const CLI::App& app, const GlobalOptions& g, SweepOptions o) {
  ScenarioSpec spec;
  const json* file = g.config.contains("scenario") ? &g.config.at("scenario") : nullptr;
  std::string name = o.scenario;
  if (name.empty() && file) take(*file, "name", name, "scenario");
  if (name.empty()) throw UsageError("--scenario is required");
  if (name != "custom") spec = scenario_preset(name);
  if (file) spec = scenario_from_json(*file, spec);
  spec.name = name;
  if (!given(app, "--fast") && g.config.contains("fast")) {
    take(g.config, "fast", o.fast, "config");
  }
  if (o.fast) spec = fast_variant(spec);
  if (g.seed || !(file && file->contains("seed"))) spec.seed = resolve_seed(g);
  spec.validate();

  const unsigned workers = resolve_workers(g);
  ProgressFn progress;
  if (!o.quiet) {
    progress = [](int done, int total) {
      std::cerr << "\rfits " << done << "/" << total << std::flush;
      if (done == total) std::cerr << "\n";
    };
  }
  const RateReport report = run_scenario(spec, workers, progress);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_text(dir / (name + "_report.json"), report_to_json(report).dump(2) + "\n");
  write_text(dir / (name + "_errors.csv"), report_csv(report));
  for (const ComponentSlope& s : report.slopes) {
    if (s.points < 2) continue;
    write_text(dir / (name + "_component" + std::to_string(s.component) + ".svg"),
               rate_svg(report, s.component));
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const ComponentSlope& s : report.slopes) {
    std::cout << "component " << s.component << ": slope " << s.fit.slope
              << " (stderr " << s.fit.stderr_slope << ", expected "
              << spec.expected_slope << " +/- " << spec.slope_tolerance << ") "
              << (s.pass ? "within" : "outside") << " tolerance\n";
  }
  std::cout << "scenario " << name << ": "
            << (report.advisory ? "advisory" : report.pass ? "pass" : "fail")
            << "\n";
  return 0;
}

int cmd_check(const GlobalOptions& g, const std::string& fault) {
  CheckOptions opts;
  opts.seed = g.seed.value_or(1);
  if (fault == "gradient") {
    opts.gradient_hook = [](EuclideanGradient& grad) { grad.U *= 1.01; };
  } else if (!fault.empty()) {
    throw UsageError("unknown fault '" + fault + "'");
  }
  bool ok = true;
  for (const CheckResult& r : run_checks(opts)) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized spline FPCA for sparse functional data"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed_value = 0;
  app.add_option("--seed", seed_value, "Seed for all randomness (drawn and printed if absent)");
  app.add_option("--workers", g.workers, "Concurrent work items (default: all cores)");
  app.add_option("--config", g.config_path, "JSON config file; flags override it");

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Simulate a sparse dataset");
  simulate->add_option("--n", sim.n, "Number of curves");
  simulate->add_option("--out", sim.out, "Output CSV (a .json sidecar is written next to it)");
  std::string family = "fourier", scores = "normal";
  simulate->add_option("--family", family, "Truth family: fourier or kinked");
  simulate->add_option("--eigenvalues", sim.truth.eigenvalues, "Strictly decreasing eigenvalues")
      ->delimiter(',');
  simulate->add_option("--sigma-e", sim.truth.sigma_e, "Noise standard deviation");
  simulate->add_option("--m-lo", sim.truth.M_lo, "Minimum observations per curve");
  simulate->add_option("--m-hi", sim.truth.M_hi, "Maximum observations per curve");
  simulate->add_option("--scores", scores, "Score distribution: normal or uniform");
  simulate->add_option("--smoothness", sim.truth.smoothness, "Sobolev smoothness of the kinked family");

  FitOptions fo;
  CLI::App* fitcmd = app.add_subcommand("fit", "Fit the model to a dataset CSV");
  fitcmd->add_option("--data", fo.data, "Dataset CSV");
  fitcmd->add_option("--out", fo.out, "Output JSON");
  fitcmd->add_option("--svg", fo.svg, "Optional SVG of the estimated eigenfunctions");
  fitcmd->add_option("--truth", fo.truth, "Truth sidecar (default: next to the CSV)");
  fitcmd->add_option("--K", fo.model.K, "Spline dimension");
  fitcmd->add_option("--m", fo.model.m, "Spline degree");
  fitcmd->add_option("--q", fo.model.q, "Penalty order");
  fitcmd->add_option("--eta", fo.model.eta, "Penalty weight");
  fitcmd->add_option("--R", fo.model.R, "Number of components");
  fitcmd->add_option("--divergence", fo.model.divergence, "frobenius, logdet or vonneumann");
  std::string method = "conjugate-gradient", retraction = "exponential", init = "moments";
  fitcmd->add_option("--method", method, "conjugate-gradient or gradient-descent");
  fitcmd->add_option("--max-iters", fo.config.max_iters, "Iteration limit");
  fitcmd->add_option("--grad-tol", fo.config.grad_tol, "Gradient tolerance relative to the start");
  fitcmd->add_option("--retraction", retraction, "exponential or qr");
  fitcmd->add_option("--init", init, "moments or random");

  SweepOptions so;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a Monte Carlo rate scenario");
  sweep->add_option("--scenario", so.scenario, "I.1 I.2 I.3 II.1 II.2 III.1 III.2 or custom");
  sweep->add_flag("--fast", so.fast, "Reduced grid (N <= 1000) with 10 replicates");
  sweep->add_option("--out-dir", so.out_dir, "Directory for JSON, CSV and SVG outputs");
  sweep->add_flag("--quiet", so.quiet, "No progress output");

  std::string fault;
  CLI::App* check = app.add_subcommand("check", "Run the fast invariant suite");
  check->add_option("--inject-fault", fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.count("--seed")) g.seed = seed_value;
    if (!g.config_path.empty()) {
      g.config = read_json(g.config_path);
      reject_unknown_keys(g.config, {"seed", "workers", "n", "truth", "model", "fit",
                                     "scenario", "fast"},
                          "config");
      if (!g.seed && g.config.contains("seed")) {
        std::uint64_t s = 0;
        take(g.config, "seed", s, "config");
        g.seed = s;
      }
      if (!app.count("--workers")) take(g.config, "workers", g.workers, "config");
    }
    if (*simulate) {
      sim.truth.family = truth_family_from_string(family);
      sim.truth.scores = score_distribution_from_string(scores);
      return cmd_simulate(*simulate, g, sim);
    }
    if (*fitcmd) {
      fo.config.method = fit_method_from_string(method);
      if (retraction == "qr") {
        fo.config.retraction = RetractionKind::QR;
      } else if (retraction != "exponential") {
        throw UsageError("retraction: expected exponential or qr");
      }
      if (init == "random") {
        fo.config.init = InitMethod::Random;
      } else if (init != "moments") {
        throw UsageError("init: expected moments or random");
      }
      return cmd_fit(*fitcmd, g, fo);
    }
    if (*sweep) return cmd_sweep(*sweep, g, so);
    return cmd_check(g, fault);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
