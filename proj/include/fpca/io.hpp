#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "fpca/eval.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/rates.hpp"
#include "fpca/simulate.hpp"

namespace fpca {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Reading failures (missing file, malformed content) throw
/// std::invalid_argument with the path in the message.

/// CSV with header `curve_id,u,y`, one row per observation.
void write_dataset_csv(const std::filesystem::path& path,
                       const SparseDataset& data);
SparseDataset read_dataset_csv(const std::filesystem::path& path);

/// Metadata written next to a simulated dataset.
struct DatasetSidecar {
  TruthSpec truth;
  std::uint64_t seed = 0;
  int N = 0;
};

/// data.csv → data.json.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

void write_sidecar(const std::filesystem::path& path, const DatasetSidecar& meta);

/// Empty when the file does not exist.
std::optional<DatasetSidecar> read_sidecar(const std::filesystem::path& path);

json truth_to_json(const TruthSpec& truth);
TruthSpec truth_from_json(const json& j, TruthSpec defaults = {});

json fit_config_to_json(const FitConfig& config);
FitConfig fit_config_from_json(const json& j, FitConfig defaults = {});

json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const json& j, ScenarioSpec defaults = {});

/// Row-major matrix with explicit dimensions.
json matrix_to_json(const Eigen::MatrixXd& A);
Eigen::MatrixXd matrix_from_json(const json& j);

struct FitSummary {
  int K = 0;
  int m = 3;
  int q = 2;
  double eta = 0.0;
  std::string divergence;
  FitResult result;
  std::optional<AlignedError> evaluation;
};

json fit_to_json(const FitSummary& fit);

json report_to_json(const RateReport& report);

/// `scenario,N,replicate,component,error_combined,error_l2`.
std::string report_csv(const RateReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);

}  // namespace fpca
