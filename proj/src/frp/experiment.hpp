#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "frp/analysis.hpp"
#include "frp/config.hpp"
#include "frp/tasks.hpp"

namespace frp {

struct RunOptions {
  /// Takes precedence over FRP_OUTPUT_DIR and output.directory.
  std::optional<std::filesystem::path> output_dir;
  /// Progress lines go here when set.
  std::ostream* progress = nullptr;
  std::uint64_t progress_every = 1000;
};

struct RunArtifacts {
  std::filesystem::path directory;
  std::filesystem::path loss_log;        ///< iteration,lr,mse,psnr,wall_ms
  std::filesystem::path spectrum_log;    ///< iteration,k,freq_cycles_per_unit,delta_k
  std::filesystem::path ntk_log;         ///< iteration,rank,eigenvalue,percentage
  std::filesystem::path timing_log;      ///< iteration,wall_ms
  std::filesystem::path config;          ///< resolved configuration
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> reconstruction;
};

struct NtkRecord {
  std::uint64_t iteration = 0;
  NTKSummary summary;
  double min_eigenvalue_ratio = 0.0;  ///< min eigenvalue / ||K||_F
};

struct RunSummary {
  RunArtifacts artifacts;
  std::uint64_t iterations = 0;
  double final_mse = 0.0;
  double final_psnr = 0.0;  ///< NaN for function1d
  double mean_iteration_ms = 0.0;
  double median_iteration_ms = 0.0;
  SpectrumReport spectrum;
  std::vector<NtkRecord> ntk;
};

/// Dataset described by a task section.
Dataset make_task_dataset(const TaskConfig& task);

/// Deterministic full-batch Adam training with the configured diagnostics.
///
/// Row t of the loss log (and spectrum / NTK rows at t) describes the
/// parameters before update t; the row labelled `iterations` describes the
/// trained network. The same config and seed give byte-identical loss,
/// spectrum and NTK logs; timing.csv carries the wall-clock measurements.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace frp
