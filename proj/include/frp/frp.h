/* C interface to the frp library: Fourier-reparameterized MLPs and the
 * experiment runner. Every function returns an frp_status; on failure
 * frp_last_error() describes the problem (per thread, valid until the next
 * call on that thread). */
#ifndef FRP_FRP_H
#define FRP_FRP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FRP_BUILDING_LIBRARY)
#define FRP_API __attribute__((visibility("default")))
#else
#define FRP_API
#endif

typedef enum frp_status {
  FRP_OK = 0,
  FRP_ERR_INVALID_ARGUMENT = 1,
  FRP_ERR_SHAPE = 2,
  FRP_ERR_IO = 3,
  FRP_ERR_FORMAT = 4,
  FRP_ERR_CONFIG = 5,
  FRP_ERR_NUMERIC = 6,
  FRP_ERR_INTERNAL = 7
} frp_status;

typedef enum frp_reparam_mode {
  FRP_REPARAM_NONE = 0,
  FRP_REPARAM_FR = 1,
  FRP_REPARAM_RR = 2,
  FRP_REPARAM_RIR = 3
} frp_reparam_mode;

/* Opaque network handle. */
typedef struct frp_network frp_network;

typedef struct frp_network_info {
  size_t input_dim;
  size_t output_dim;
  size_t hidden_layers;
  size_t trainable_parameters;
  size_t reparameterized_layers;
  frp_reparam_mode reparam_mode;
} frp_network_info;

typedef struct frp_run_summary {
  uint64_t iterations;
  double final_mse;
  double final_psnr; /* NaN for function1d tasks */
  double mean_iteration_ms;
  double median_iteration_ms;
  char output_dir[1024];
} frp_run_summary;

/* Receives one progress line (without newline). */
typedef void (*frp_progress_fn)(const char* line, void* user);

FRP_API const char* frp_version(void);
FRP_API const char* frp_last_error(void);
FRP_API const char* frp_status_name(frp_status status);

FRP_API frp_status frp_network_load(const char* path, frp_network** out);
FRP_API frp_status frp_network_save(const frp_network* net, const char* path);
FRP_API void frp_network_free(frp_network* net);
FRP_API frp_status frp_network_info_get(const frp_network* net, frp_network_info* out);

/* New network with every reparameterized layer collapsed to W = Lambda B. */
FRP_API frp_status frp_network_merge(const frp_network* net, frp_network** out);

/* inputs: rows x input_dim, row-major; outputs: rows x output_dim. */
FRP_API frp_status frp_network_forward(const frp_network* net, const double* inputs, size_t rows,
                                       double* outputs, size_t outputs_len);

/* dataset: "1d:<n>" for the rounded multi-sine grid, otherwise a PGM/PPM
 * path. psnr is NaN for 1d datasets. Either output pointer may be NULL. */
FRP_API frp_status frp_evaluate(const frp_network* net, const char* dataset, double* mse,
                                double* psnr);

/* Runs the experiment described by a config file. output_dir may be NULL
 * (then FRP_OUTPUT_DIR, then the config's output.directory apply);
 * progress may be NULL; summary may be NULL. */
FRP_API frp_status frp_run_experiment(const char* config_path, const char* output_dir,
                                      frp_progress_fn progress, void* user,
                                      frp_run_summary* summary);

/* Parses and validates a config without running it. */
FRP_API frp_status frp_config_check(const char* config_path);

/* load, merge, save */
FRP_API frp_status frp_merge_checkpoint(const char* in_path, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif
