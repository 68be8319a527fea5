#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cfprop/dataset.hpp"
#include "cfprop/eval.hpp"
#include "cfprop/trainer.hpp"

namespace cfprop {

enum class Method { kCp, kCpLo0, kCpLe0, kTarnet, kRidge1, kRidge2, kKnn, kPsm };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
/// Stable id used for per-method RNG stream derivation; independent of the
/// order methods are listed in.
std::uint64_t method_stream_id(Method m);

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t d = 8;
  double noise_c = 1.0;
};

struct CsvSpec {
  std::string path;
  CsvSchema schema;
};

struct BaselineConfig {
  std::size_t knn_k = 5;
  std::size_t psm_k = 5;
  double ridge_lambda = 1.0;
};

/// Declarative experiment description; the JSON form rejects unknown keys.
struct ExperimentConfig {
  std::variant<SyntheticSpec, CsvSpec> dataset;
  double train_fraction = 0.1;
  double val_fraction = 0.1;
  double test_fraction = 0.8;
  std::size_t trials = 10;
  std::uint64_t seed = 20200827;
  std::vector<Method> methods{Method::kCp, Method::kTarnet};
  TrainConfig train;
  TrainGrids grids;
  std::vector<Method> grid_methods;  // grid search opt-in
  std::vector<double> noise_levels{1, 3, 5, 7, 9};
  BaselineConfig baselines;
  std::string output_dir = "out";
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json serialize_config(const ExperimentConfig& cfg);

/// Reads a JSON config file and applies key=value overrides (dotted paths,
/// values parsed as JSON when possible, else taken as strings).
ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides = {});

/// FNV-1a 64 hash of the canonical serialized config, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

struct RunOptions {
  std::size_t workers = 1;
  bool quiet = false;
};

struct TrialFailure {
  std::size_t trial = 0;
  std::string method;
  std::string message;
};

struct RunResult {
  TrialSummary summary;
  std::vector<EvalReport> reports;        // complete trials only, trial-major
  std::vector<TrialFailure> failures;
  std::string summary_csv_path;
  std::string summary_json_path;
  bool ok = true;  // false when some method failed every trial
};

/// Writes the synthetic dataset of the config to <output_dir>/dataset.csv
/// and returns the path. Regeneration with the same config is byte
/// identical.
std::string cmd_gen(const ExperimentConfig& cfg);

/// Full protocol: per trial and method, split / fit / evaluate; then
/// aggregate with paired t-tests against the cp reference and write
/// summary.csv, summary.json, per-trial reports, and a MANIFEST.
RunResult cmd_run(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct NoiseResult {
  std::vector<std::pair<double, TrialSummary>> by_level;
  std::string summary_csv_path;
  bool ok = true;
};

/// cmd_run once per noise level c, with N(0, c^2) noise injected into the
/// training outcomes of each trial; emits a long-format CSV over
/// (method, c, partition).
NoiseResult cmd_noise(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Re-aggregates previously written per-trial reports in <dir>/trials and
/// rewrites the summary files.
RunResult cmd_report(const std::string& dir, const std::string& reference = "cp");

}  // namespace cfprop
