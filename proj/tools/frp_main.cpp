// Command-line front end over the C API.
#include <cmath>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "frp/frp.h"

namespace {

int report(frp_status status) {
  if (status == FRP_OK) return 0;
  std::fprintf(stderr, "frp: %s: %s\n", frp_status_name(status), frp_last_error());
  return 1;
}

void print_progress(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier-reparameterized MLP experiments"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "train according to a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output-dir", output_dir, "override the output directory");
  run->add_flag("-q,--quiet", quiet, "no progress output");

  auto* check = app.add_subcommand("check", "parse and validate a config file");
  check->add_option("config", config_path, "config file")->required();

  std::string in_path, out_path;
  auto* merge = app.add_subcommand("merge", "collapse reparameterized layers for inference");
  merge->add_option("checkpoint-in", in_path)->required();
  merge->add_option("checkpoint-out", out_path)->required();

  std::string ckpt, dataset;
  auto* eval = app.add_subcommand("eval", "MSE / PSNR of a checkpoint on a dataset");
  eval->add_option("checkpoint", ckpt)->required();
  eval->add_option("dataset", dataset, "image path (PGM/PPM) or 1d:<samples>")->required();

  auto* version = app.add_subcommand("version", "print the library version");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    frp_run_summary summary{};
    const frp_status s = frp_run_experiment(config_path.c_str(),
                                            output_dir.empty() ? nullptr : output_dir.c_str(),
                                            quiet ? nullptr : print_progress, nullptr, &summary);
    if (s != FRP_OK) return report(s);
    std::printf("iterations %llu\nfinal_mse %.9g\n",
                static_cast<unsigned long long>(summary.iterations), summary.final_mse);
    if (!std::isnan(summary.final_psnr)) std::printf("final_psnr %.6f\n", summary.final_psnr);
    std::printf("mean_iteration_ms %.4f\noutput %s\n", summary.mean_iteration_ms,
                summary.output_dir);
    return 0;
  }
  if (*check) {
    const frp_status s = frp_config_check(config_path.c_str());
    if (s == FRP_OK) std::printf("ok\n");
    return report(s);
  }
  if (*merge) return report(frp_merge_checkpoint(in_path.c_str(), out_path.c_str()));
  if (*eval) {
    frp_network* net = nullptr;
    frp_status s = frp_network_load(ckpt.c_str(), &net);
    if (s != FRP_OK) return report(s);
    double mse = 0.0, psnr = 0.0;
    s = frp_evaluate(net, dataset.c_str(), &mse, &psnr);
    frp_network_free(net);
    if (s != FRP_OK) return report(s);
    std::printf("mse %.9g\n", mse);
    if (!std::isnan(psnr)) std::printf("psnr %.6f\n", std::isinf(psnr) ? INFINITY : psnr);
    return 0;
  }
  if (*version) {
    std::printf("frp %s\n", frp_version());
    return 0;
  }
  return 0;
}
