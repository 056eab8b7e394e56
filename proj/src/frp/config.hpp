#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "frp/network.hpp"
#include "frp/optim.hpp"

namespace frp {

enum class TaskKind { Function1D, Image2D };

struct TaskConfig {
  TaskKind kind = TaskKind::Function1D;
  std::size_t samples = 300;  ///< function1d grid size
  std::string image;          ///< image2d: PGM/PPM path

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

struct NetworkConfig {
  std::vector<std::size_t> hidden = {128, 128, 128, 128};
  ActivationType activation = ActivationType::ReLU;
  /// Unset: 5 for function1d, 30 for image2d.
  std::optional<double> omega0;
  double spread = 0.1;
  std::size_t encoding_levels = 0;  ///< 0 disables positional encoding
  bool encoding_include_input = false;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct TrainingConfig {
  std::uint64_t iterations = 10000;
  LrSchedule schedule = ConstantLr{1e-6};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// Cadences in iterations; 0 disables. Diagnostics run at iteration 0, every
/// multiple of the cadence, and after the final step.
struct DiagnosticsConfig {
  std::uint64_t log_every = 1;
  std::uint64_t spectrum_every = 0;
  std::uint64_t ntk_every = 0;
  std::size_t ntk_samples = 64;

  friend bool operator==(const DiagnosticsConfig&, const DiagnosticsConfig&) = default;
};

struct OutputConfig {
  std::string directory = "runs/default";
  bool checkpoint = true;
  bool reconstruction = true;
  /// Off by default so loss.csv stays byte-identical across reruns;
  /// timing.csv always has the measured values.
  bool wall_time_in_loss_log = false;

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct ExperimentConfig {
  TaskConfig task;
  NetworkConfig network;
  ReparamConfig reparam;
  TrainingConfig training;
  DiagnosticsConfig diagnostics;
  OutputConfig output;

  /// Network architecture implied by the task and network sections.
  NetworkSpec network_spec() const;
  AdamHyper adam() const;
  /// Structural checks plus existence of referenced files.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Environment variable that, when set, replaces output.directory.
inline constexpr const char* kOutputDirEnv = "FRP_OUTPUT_DIR";

/// Strict parser for the sectioned key = value format. Relative image paths
/// are resolved against `base_dir`.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config(const std::filesystem::path& path);
/// Every field written explicitly; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace frp
