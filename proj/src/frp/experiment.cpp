#include "frp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "frp/checkpoint.hpp"
#include "frp/errors.hpp"
#include "frp/optim.hpp"
#include "frp/text.hpp"

namespace frp {

namespace {

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const char* header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
    out_ << header << '\n';
  }
  std::ofstream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (options.output_dir) return *options.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return config.output.directory;
}

std::vector<double> column0(const Matrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, 0);
  return out;
}

// Training allocates the same multi-megabyte temporaries every iteration.
// glibc would hand each one back to the kernel and fault it in again on the
// next iteration, which costs more than the arithmetic; keep them on the heap.
void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
  static const bool once = [] {
    mallopt(M_MMAP_THRESHOLD, 512 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)once;
#endif
}

bool due(std::uint64_t t, std::uint64_t every) { return every > 0 && t % every == 0; }

}  // namespace

Dataset make_task_dataset(const TaskConfig& task) {
  if (task.kind == TaskKind::Function1D) return make_dataset_1d(task.samples);
  return make_dataset_2d(load_image(task.image));
}

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  keep_large_blocks_on_heap();
  NetworkSpec spec = config.network_spec();
  const Dataset data = make_task_dataset(config.task);
  const bool image = config.task.kind == TaskKind::Image2D;
  spec.output_dim = data.targets.cols();

  RunSummary summary;
  RunArtifacts& art = summary.artifacts;
  art.directory = resolve_output_dir(config, options);
  std::error_code ec;
  std::filesystem::create_directories(art.directory, ec);
  if (ec) throw IoError("cannot create output directory '" + art.directory.string() + "'");
  art.loss_log = art.directory / "loss.csv";
  art.spectrum_log = art.directory / "spectrum.csv";
  art.ntk_log = art.directory / "ntk.csv";
  art.timing_log = art.directory / "timing.csv";
  art.config = art.directory / "config.toml";
  {
    std::ofstream cfg(art.config);
    cfg << serialize_config(config);
    if (!cfg) throw IoError("cannot write '" + art.config.string() + "'");
  }

  CsvFile loss_csv(art.loss_log, "iteration,lr,mse,psnr,wall_ms");
  CsvFile spectrum_csv(art.spectrum_log, "iteration,k,freq_cycles_per_unit,delta_k");
  CsvFile ntk_csv(art.ntk_log, "iteration,rank,eigenvalue,percentage");
  CsvFile timing_csv(art.timing_log, "iteration,wall_ms");

  Network net = Network::initialize(spec, config.training.seed);
  AdamState state;
  AdamHyper hyper = config.adam();
  const std::uint64_t iterations = config.training.iterations;
  const DiagnosticsConfig& diag = config.diagnostics;

  const bool spectral = !image && diag.spectrum_every > 0;
  ComplexVector target_spectrum;
  double dx = 0.0;
  if (spectral) {
    require_uniform_grid(data);
    target_spectrum = dft(column0(data.targets));
    dx = data.inputs(1, 0) - data.inputs(0, 0);
  }
  Matrix ntk_inputs;
  if (diag.ntk_every > 0) ntk_inputs = ntk_sample_inputs(data, diag.ntk_samples);

  auto log_loss = [&](std::uint64_t t, double lr, double loss, const Matrix& pred,
                      std::optional<double> wall_ms) {
    auto& o = loss_csv.stream();
    o << t << ',' << format_double(lr) << ',' << format_double(loss) << ',';
    if (image) o << format_double(psnr(pred, data.targets));
    o << ',';
    if (wall_ms && config.output.wall_time_in_loss_log) o << format_double(*wall_ms);
    o << '\n';
  };
  auto log_spectrum = [&](std::uint64_t t, const Matrix& pred) {
    const FreqError fe = freq_error_spectrum(target_spectrum, column0(pred));
    if (summary.spectrum.checkpoints.empty()) summary.spectrum.frequencies = fe.bins;
    summary.spectrum.checkpoints.push_back(t);
    summary.spectrum.delta.push_back(fe.delta);
    auto& o = spectrum_csv.stream();
    for (std::size_t i = 0; i < fe.bins.size(); ++i) {
      o << t << ',' << fe.bins[i] << ',' << format_double(bin_frequency(fe.bins[i], data.size(), dx))
        << ',' << format_double(fe.delta[i]) << '\n';
    }
  };
  auto log_ntk = [&](std::uint64_t t) {
    const Matrix k = empirical_ntk(net, ntk_inputs);
    NtkRecord rec;
    rec.iteration = t;
    rec.summary = ntk_summary(k);
    rec.min_eigenvalue_ratio = rec.summary.eigenvalues.back() / frobenius_norm(k);
    auto& o = ntk_csv.stream();
    for (std::size_t r = 0; r < rec.summary.eigenvalues.size(); ++r) {
      o << t << ',' << r + 1 << ',' << format_double(rec.summary.eigenvalues[r]) << ','
        << format_double(rec.summary.percentages[r]) << '\n';
    }
    summary.ntk.push_back(std::move(rec));
  };

  std::vector<double> iteration_ms;
  iteration_ms.reserve(iterations);
  using Clock = std::chrono::steady_clock;
  for (std::uint64_t t = 0; t < iterations; ++t) {
    hyper.lr = lr_at(config.training.schedule, t);
    const auto start = Clock::now();
    const ForwardResult fr = forward(net, data.inputs);
    const LossResult loss = mse_loss(fr.output, data.targets);
    if (!std::isfinite(loss.loss)) {
      throw NumericError("non-finite loss at iteration " + std::to_string(t));
    }
    const GradientSet grads = backward(net, fr.trace, loss.gradient);
    if (due(t, diag.ntk_every)) {
      // Evaluated on the pre-update parameters; kept outside the timed span.
      const auto pause = Clock::now();
      log_ntk(t);
      const auto resume = Clock::now();
      adam_step(net, grads, state, hyper);
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - resume +
                                                                   (pause - start))
                            .count();
      iteration_ms.push_back(ms);
    } else {
      adam_step(net, grads, state, hyper);
      iteration_ms.push_back(
          std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
    timing_csv.stream() << t << ',' << format_double(iteration_ms.back()) << '\n';
    if (due(t, diag.log_every)) log_loss(t, hyper.lr, loss.loss, fr.output, iteration_ms.back());
    if (spectral && due(t, diag.spectrum_every)) log_spectrum(t, fr.output);
    if (options.progress && options.progress_every > 0 && t % options.progress_every == 0) {
      *options.progress << "iter " << t << "  mse " << loss.loss << '\n';
    }
  }

  const Matrix final_pred = predict(net, data.inputs);
  summary.iterations = iterations;
  summary.final_mse = mse(final_pred, data.targets);
  if (!std::isfinite(summary.final_mse)) {
    throw NumericError("non-finite loss at iteration " + std::to_string(iterations));
  }
  summary.final_psnr = image ? psnr(final_pred, data.targets)
                             : std::numeric_limits<double>::quiet_NaN();
  log_loss(iterations, lr_at(config.training.schedule, iterations), summary.final_mse, final_pred,
           std::nullopt);
  if (spectral) log_spectrum(iterations, final_pred);
  if (diag.ntk_every > 0) log_ntk(iterations);

  if (!iteration_ms.empty()) {
    double total = 0.0;
    for (double v : iteration_ms) total += v;
    summary.mean_iteration_ms = total / static_cast<double>(iteration_ms.size());
    std::vector<double> sorted = iteration_ms;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    summary.median_iteration_ms = sorted[sorted.size() / 2];
  }

  loss_csv.close();
  spectrum_csv.close();
  ntk_csv.close();
  timing_csv.close();

  if (config.output.checkpoint) {
    net.sync_derived_weights();
    art.checkpoint = art.directory / "checkpoint.frp";
    save_checkpoint(net, *art.checkpoint);
  }
  if (image && config.output.reconstruction) {
    const Image recon = image_from_values(final_pred, data.width, data.height);
    art.reconstruction = art.directory / (recon.channels == 1 ? "reconstruction.pgm"
                                                              : "reconstruction.ppm");
    save_image(recon, *art.reconstruction);
  }
  return summary;
}

}  // namespace frp
