#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtml/dataset.hpp"
#include "mtml/trainer.hpp"

namespace mtml {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataConfig {
  std::optional<ClusterSpec> synth;
  std::optional<std::string> csv_path;
  std::string label_column = "label";
  double val_fraction = 0.2;
};

// One JSON document describing a full run; unknown keys are rejected.
struct RunConfig {
  std::string strategy = "mul-dml";
  std::optional<double> tau_min = 0.15;  // paper's valid range as the default grid
  std::optional<double> tau_max = 0.75;
  std::optional<double> dtau = 0.1;
  std::optional<double> tau;
  std::size_t num_slices = 0;  // 0 = derive from the schedule
  std::size_t slice_dim = 256;
  std::vector<std::size_t> backbone_widths = {256, 512};
  OptimConfig optim;
  BatchConfig batch;
  DataConfig data;  // defaults to the heterogeneous synthetic set
  std::uint64_t seed = 1;
  std::string out_dir = "mtml-run";
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Full echo including every applied default; reloading it reproduces the run.
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Builds the dataset named by the config (seeded off cfg.seed) and splits it.
std::pair<LabeledDataset, LabeledDataset> build_datasets(const RunConfig& cfg);

// Schedule/tau resolution into a concrete strategy + train setup.
StrategyConfig resolve_run_strategy(const RunConfig& cfg);
TrainSetup make_train_setup(const RunConfig& cfg);

}  // namespace mtml
