#include "fpca/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fpca {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read_if(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(where + "." + key + ": wrong type");
  }
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("'" + path.string() + "' is not valid JSON: " +
                                e.what());
  }
}

void write_dataset_csv(const fs::path& path, const SparseDataset& data) {
  std::string text = "curve_id,u,y\n";
  for (std::size_t n = 0; n < data.curves.size(); ++n) {
    const Curve& c = data.curves[n];
    for (std::size_t j = 0; j < c.size(); ++j) {
      text += std::to_string(n) + ',' + fmt(c.times[j]) + ',' +
              fmt(c.values[j]) + '\n';
    }
  }
  write_text(path, text);
}

SparseDataset read_dataset_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  const std::string where = "'" + path.string() + "'";
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(where + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "curve_id,u,y") {
    throw std::invalid_argument(where + ": header must be 'curve_id,u,y'");
  }
  SparseDataset data;
  std::map<std::string, std::size_t> index;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id, u, y;
    if (!std::getline(row, id, ',') || !std::getline(row, u, ',') ||
        !std::getline(row, y)) {
      throw std::invalid_argument(where + ": line " + std::to_string(lineno) +
                                  " needs three fields");
    }
    double uv, yv;
    try {
      std::size_t pu, py;
      uv = std::stod(u, &pu);
      yv = std::stod(y, &py);
      if (pu != u.size() || py != y.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::invalid_argument(where + ": line " + std::to_string(lineno) +
                                  " has a non-numeric value");
    }
    auto [it, inserted] = index.emplace(id, data.curves.size());
    if (inserted) data.curves.emplace_back();
    data.curves[it->second].times.push_back(uv);
    data.curves[it->second].values.push_back(yv);
  }
  if (data.curves.empty()) throw std::invalid_argument(where + ": no observations");
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
  return data;
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

json truth_to_json(const TruthSpec& t) {
  return {{"family", to_string(t.family)},
          {"eigenvalues", t.eigenvalues},
          {"sigma_e", t.sigma_e},
          {"m_lo", t.M_lo},
          {"m_hi", t.M_hi},
          {"scores", to_string(t.scores)},
          {"smoothness", t.smoothness}};
}

TruthSpec truth_from_json(const json& j, TruthSpec t) {
  const std::string where = "truth";
  reject_unknown(j, {"family", "eigenvalues", "sigma_e", "m_lo", "m_hi",
                     "scores", "smoothness"},
                 where);
  std::string family = to_string(t.family);
  std::string scores = to_string(t.scores);
  read_if(j, "family", family, where);
  read_if(j, "scores", scores, where);
  t.family = truth_family_from_string(family);
  t.scores = score_distribution_from_string(scores);
  read_if(j, "eigenvalues", t.eigenvalues, where);
  read_if(j, "sigma_e", t.sigma_e, where);
  read_if(j, "m_lo", t.M_lo, where);
  read_if(j, "m_hi", t.M_hi, where);
  read_if(j, "smoothness", t.smoothness, where);
  return t;
}

void write_sidecar(const fs::path& path, const DatasetSidecar& meta) {
  const json j = {{"format_version", kFormatVersion},
                  {"truth", truth_to_json(meta.truth)},
                  {"seed", meta.seed},
                  {"n", meta.N}};
  write_text(path, j.dump(2) + "\n");
}

std::optional<DatasetSidecar> read_sidecar(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  const json j = read_json(path);
  const std::string where = "'" + path.string() + "'";
  if (!j.is_object() || !j.contains("truth") || !j.contains("seed")) {
    throw std::invalid_argument(where + ": missing truth or seed");
  }
  DatasetSidecar meta;
  meta.truth = truth_from_json(j.at("truth"));
  read_if(j, "seed", meta.seed, where);
  read_if(j, "n", meta.N, where);
  return meta;
}

json fit_config_to_json(const FitConfig& c) {
  json j = {{"method", to_string(c.method)},
            {"max_iters", c.max_iters},
            {"grad_tol", c.grad_tol},
            {"initial_step", c.armijo.initial_step},
            {"shrink", c.armijo.shrink},
            {"sufficient_decrease", c.armijo.sufficient},
            {"max_shrinks", c.armijo.max_shrinks},
            {"retraction", c.retraction == RetractionKind::QR ? "qr" : "exponential"},
            {"init", c.init == InitMethod::Random ? "random" : "moments"},
            {"sigma2_init", c.sigma2_init},
            {"init_seed", c.init_seed},
            {"interpolate", c.armijo.interpolate},
            {"precondition", c.precondition},
            {"powell_restart", c.powell_restart}};
  if (c.bounds) {
    j["bounds"] = {{"b0", c.bounds->b0}, {"b1", c.bounds->b1}, {"b2", c.bounds->b2}};
  }
  return j;
}

FitConfig fit_config_from_json(const json& j, FitConfig c) {
  const std::string where = "fit";
  reject_unknown(j, {"method", "max_iters", "grad_tol", "initial_step", "shrink",
                     "sufficient_decrease", "max_shrinks", "retraction", "init",
                     "sigma2_init", "init_seed", "interpolate", "precondition",
                     "powell_restart", "bounds"},
                 where);
  std::string method = to_string(c.method);
  read_if(j, "method", method, where);
  c.method = fit_method_from_string(method);
  read_if(j, "max_iters", c.max_iters, where);
  read_if(j, "grad_tol", c.grad_tol, where);
  read_if(j, "initial_step", c.armijo.initial_step, where);
  read_if(j, "shrink", c.armijo.shrink, where);
  read_if(j, "sufficient_decrease", c.armijo.sufficient, where);
  read_if(j, "max_shrinks", c.armijo.max_shrinks, where);
  read_if(j, "sigma2_init", c.sigma2_init, where);
  read_if(j, "init_seed", c.init_seed, where);
  read_if(j, "interpolate", c.armijo.interpolate, where);
  read_if(j, "precondition", c.precondition, where);
  read_if(j, "powell_restart", c.powell_restart, where);
  if (j.contains("retraction")) {
    std::string r;
    read_if(j, "retraction", r, where);
    if (r == "qr") {
      c.retraction = RetractionKind::QR;
    } else if (r == "exponential") {
      c.retraction = RetractionKind::Exponential;
    } else {
      throw std::invalid_argument("fit.retraction: expected exponential or qr");
    }
  }
  if (j.contains("init")) {
    std::string s;
    read_if(j, "init", s, where);
    if (s == "random") {
      c.init = InitMethod::Random;
    } else if (s == "moments") {
      c.init = InitMethod::Moments;
    } else {
      throw std::invalid_argument("fit.init: expected moments or random");
    }
  }
  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    reject_unknown(b, {"b0", "b1", "b2"}, "fit.bounds");
    ParameterBounds pb;
    read_if(b, "b0", pb.b0, "fit.bounds");
    read_if(b, "b1", pb.b1, "fit.bounds");
    read_if(b, "b2", pb.b2, "fit.bounds");
    c.bounds = pb;
  }
  return c;
}

json scenario_to_json(const ScenarioSpec& s) {
  return {{"name", s.name},
          {"q", s.q},
          {"m", s.m},
          {"truth", truth_to_json(s.truth)},
          {"k_const", s.k_const},
          {"k_power", s.k_power},
          {"eta_const", s.eta_const},
          {"eta_power", s.eta_power},
          {"n_grid", s.N_grid},
          {"replicates", s.replicates},
          {"seed", s.seed},
          {"expected_slope", s.expected_slope},
          {"slope_tolerance", s.slope_tolerance},
          {"divergence", s.divergence},
          {"fit", fit_config_to_json(s.fit)}};
}

ScenarioSpec scenario_from_json(const json& j, ScenarioSpec s) {
  const std::string where = "scenario";
  reject_unknown(j, {"name", "q", "m", "truth", "k_const", "k_power",
                     "eta_const", "eta_power", "n_grid", "replicates", "seed",
                     "expected_slope", "slope_tolerance", "divergence", "fit"},
                 where);
  read_if(j, "name", s.name, where);
  read_if(j, "q", s.q, where);
  read_if(j, "m", s.m, where);
  if (j.contains("truth")) s.truth = truth_from_json(j.at("truth"), s.truth);
  read_if(j, "k_const", s.k_const, where);
  read_if(j, "k_power", s.k_power, where);
  read_if(j, "eta_const", s.eta_const, where);
  read_if(j, "eta_power", s.eta_power, where);
  read_if(j, "n_grid", s.N_grid, where);
  read_if(j, "replicates", s.replicates, where);
  read_if(j, "seed", s.seed, where);
  read_if(j, "expected_slope", s.expected_slope, where);
  read_if(j, "slope_tolerance", s.slope_tolerance, where);
  read_if(j, "divergence", s.divergence, where);
  if (j.contains("fit")) s.fit = fit_config_from_json(j.at("fit"), s.fit);
  return s;
}

json matrix_to_json(const Eigen::MatrixXd& A) {
  std::vector<double> data;
  data.reserve(A.size());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index k = 0; k < A.cols(); ++k) data.push_back(A(i, k));
  return {{"rows", A.rows()}, {"cols", A.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
      throw std::invalid_argument("matrix: data length does not match dimensions");
    }
    Eigen::MatrixXd A(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index k = 0; k < cols; ++k) A(i, k) = data[i * cols + k];
    return A;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("matrix: ") + e.what());
  }
}

json fit_to_json(const FitSummary& f) {
  const FitResult& r = f.result;
  std::vector<double> lambda(r.point.lambda.data(),
                             r.point.lambda.data() + r.point.lambda.size());
  json j = {{"format_version", kFormatVersion},
            {"basis", {{"K", f.K}, {"m", f.m}, {"q", f.q}}},
            {"eta", f.eta},
            {"divergence", f.divergence},
            {"U", matrix_to_json(r.point.U)},
            {"lambda", lambda},
            {"sigma2", r.point.sigma2},
            {"loss_trace", r.loss_trace},
            {"grad_norm_trace", r.grad_norm_trace},
            {"status", to_string(r.status)},
            {"iterations", r.iterations},
            {"fallback_init", r.used_fallback_init}};
  if (f.evaluation) {
    json comps = json::array();
    for (std::size_t i = 0; i < f.evaluation->components.size(); ++i) {
      const ComponentError& c = f.evaluation->components[i];
      comps.push_back({{"component", i + 1},
                       {"truth_component", c.truth_index + 1},
                       {"sign", c.sign},
                       {"l2_sq_error", c.l2_sq_error},
                       {"J", c.J_value},
                       {"eta_J", c.eta_J},
                       {"combined", c.combined}});
    }
    j["evaluation"] = {{"components", comps}};
  }
  return j;
}

json report_to_json(const RateReport& rep) {
  json cells = json::array();
  for (const CellSummary& c : rep.cells) {
    cells.push_back({{"N", c.N},
                     {"K", c.K},
                     {"eta", c.eta},
                     {"fits", c.fits},
                     {"failures", c.failures},
                     {"valid", c.valid},
                     {"mean_combined", c.mean_combined},
                     {"mean_l2", c.mean_l2}});
  }
  json slopes = json::array();
  for (const ComponentSlope& s : rep.slopes) {
    slopes.push_back({{"component", s.component},
                      {"slope", s.fit.slope},
                      {"intercept", s.fit.intercept},
                      {"stderr", s.fit.stderr_slope},
                      {"points", s.points},
                      {"pass", s.pass}});
  }
  json j = {{"format_version", kFormatVersion},
            {"scenario", scenario_to_json(rep.spec)},
            {"cells", cells},
            {"slopes", slopes},
            {"pass", rep.pass},
            {"advisory", rep.advisory},
            {"monotone", rep.monotone},
            {"warnings", rep.warnings}};
  if (rep.smoothness.performed) {
    j["smoothness_check"] = {{"slopes", rep.smoothness.slopes},
                             {"expected", rep.smoothness.expected},
                             {"pass", rep.smoothness.pass}};
  }
  return j;
}

std::string report_csv(const RateReport& rep) {
  std::string text = "scenario,N,replicate,component,error_combined,error_l2\n";
  for (const ErrorRecord& r : rep.records) {
    text += rep.spec.name + ',' + std::to_string(r.N) + ',' +
            std::to_string(r.replicate) + ',' + std::to_string(r.component) +
            ',' + fmt(r.combined) + ',' + fmt(r.l2) + '\n';
  }
  return text;
}

}  // namespace fpca
