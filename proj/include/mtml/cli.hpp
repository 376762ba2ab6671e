#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mtml/config.hpp"

namespace mtml::cli {

// Command-line values that take precedence over config-file fields.
struct Overrides {
  std::optional<std::string> strategy;
  std::optional<double> tau_min, tau_max, dtau, tau;
  std::optional<std::size_t> slice_dim, epochs, P, K, num_slices;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> csv;
  std::optional<std::string> label_col;

  void apply(RunConfig& cfg) const;
};

// exit codes: 0 success, 2 configuration/input error, 3 training abort, 1 unexpected
int cmd_train(const std::optional<std::string>& config_path, const Overrides& ov);
int cmd_eval(const std::string& checkpoint_path, const std::optional<std::string>& config_path,
             const Overrides& ov);
int cmd_audit(const std::string& checkpoint_path, const std::optional<std::string>& config_path,
              double tau, const Overrides& ov);
int cmd_sweep(const std::optional<std::string>& config_path, const std::string& sweep_path,
              const Overrides& ov);
int cmd_gen_data(const std::optional<std::string>& config_path, const std::string& out_csv,
                 const Overrides& ov);

}  // namespace mtml::cli
