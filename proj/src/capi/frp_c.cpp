#include "frp/frp.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <limits>
#include <new>
#include <sstream>
#include <string>

#include "frp/checkpoint.hpp"
#include "frp/config.hpp"
#include "frp/errors.hpp"
#include "frp/experiment.hpp"
#include "frp/network.hpp"
#include "frp/tasks.hpp"
#include "frp/text.hpp"

struct frp_network {
  frp::Network net;
};

namespace {

thread_local std::string g_last_error;

frp_status status_of(frp::ErrorKind kind) {
  switch (kind) {
    case frp::ErrorKind::Shape: return FRP_ERR_SHAPE;
    case frp::ErrorKind::Validation: return FRP_ERR_INVALID_ARGUMENT;
    case frp::ErrorKind::Format: return FRP_ERR_FORMAT;
    case frp::ErrorKind::Config: return FRP_ERR_CONFIG;
    case frp::ErrorKind::Numeric: return FRP_ERR_NUMERIC;
    case frp::ErrorKind::Io: return FRP_ERR_IO;
  }
  return FRP_ERR_INTERNAL;
}

frp_status fail(frp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class Fn>
frp_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return FRP_OK;
  } catch (const frp::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FRP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FRP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FRP_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (!p) throw frp::ValidationError(std::string(name) + " must not be NULL");
}

frp::Dataset dataset_from_text(const std::string& spec) {
  if (spec.rfind("1d:", 0) == 0) {
    const auto n = frp::parse_integer<std::size_t>(std::string_view(spec).substr(3));
    if (!n) throw frp::ValidationError("dataset '" + spec + "': expected 1d:<sample count>");
    return frp::make_dataset_1d(*n);
  }
  return frp::make_dataset_2d(frp::load_image(spec));
}

}  // namespace

extern "C" {

const char* frp_version(void) { return FRP_VERSION_STRING; }

const char* frp_last_error(void) { return g_last_error.c_str(); }

const char* frp_status_name(frp_status status) {
  switch (status) {
    case FRP_OK: return "ok";
    case FRP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FRP_ERR_SHAPE: return "shape error";
    case FRP_ERR_IO: return "i/o error";
    case FRP_ERR_FORMAT: return "format error";
    case FRP_ERR_CONFIG: return "config error";
    case FRP_ERR_NUMERIC: return "numeric error";
    case FRP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

frp_status frp_network_load(const char* path, frp_network** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new frp_network{frp::load_checkpoint(path)};
  });
}

frp_status frp_network_save(const frp_network* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    frp::save_checkpoint(net->net, path);
  });
}

void frp_network_free(frp_network* net) { delete net; }

frp_status frp_network_info_get(const frp_network* net, frp_network_info* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    const frp::NetworkSpec& s = net->net.spec();
    out->input_dim = s.input_dim;
    out->output_dim = s.output_dim;
    out->hidden_layers = s.hidden_widths.size();
    out->trainable_parameters = net->net.trainable_count();
    out->reparameterized_layers = s.reparam_layer_indices().size();
    out->reparam_mode = static_cast<frp_reparam_mode>(static_cast<int>(s.reparam.mode));
  });
}

frp_status frp_network_merge(const frp_network* net, frp_network** out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = nullptr;
    *out = new frp_network{frp::merge(net->net)};
  });
}

frp_status frp_network_forward(const frp_network* net, const double* inputs, size_t rows,
                               double* outputs, size_t outputs_len) {
  return guarded([&] {
    require(net, "net");
    require(inputs, "inputs");
    require(outputs, "outputs");
    const frp::NetworkSpec& s = net->net.spec();
    if (rows == 0) throw frp::ValidationError("rows must be >= 1");
    if (outputs_len != rows * s.output_dim) {
      throw frp::ShapeError("outputs buffer holds " + std::to_string(outputs_len) +
                            " values, need " + std::to_string(rows * s.output_dim));
    }
    frp::Matrix x(rows, s.input_dim, std::vector<double>(inputs, inputs + rows * s.input_dim));
    const frp::Matrix y = frp::predict(net->net, x);
    std::memcpy(outputs, y.data().data(), y.size() * sizeof(double));
  });
}

frp_status frp_evaluate(const frp_network* net, const char* dataset, double* mse, double* psnr) {
  return guarded([&] {
    require(net, "net");
    require(dataset, "dataset");
    const frp::Dataset data = dataset_from_text(dataset);
    const frp::Matrix pred = frp::predict(net->net, data.inputs);
    if (pred.cols() != data.targets.cols()) {
      throw frp::ShapeError("network output_dim " + std::to_string(pred.cols()) +
                            " does not match dataset targets " +
                            std::to_string(data.targets.cols()));
    }
    if (mse) *mse = frp::mse(pred, data.targets);
    if (psnr) {
      *psnr = data.domain == frp::DomainTag::Image2D ? frp::psnr(pred, data.targets)
                                                      : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

frp_status frp_run_experiment(const char* config_path, const char* output_dir,
                              frp_progress_fn progress, void* user, frp_run_summary* summary) {
  return guarded([&] {
    require(config_path, "config_path");
    const frp::ExperimentConfig config = frp::parse_config(config_path);
    frp::RunOptions options;
    if (output_dir) options.output_dir = output_dir;

    class LineBuf : public std::stringbuf {
     public:
      LineBuf(frp_progress_fn fn, void* user) : fn_(fn), user_(user) {}
      int sync() override {
        std::string s = str();
        std::size_t start = 0, nl;
        while ((nl = s.find('\n', start)) != std::string::npos) {
          fn_(s.substr(start, nl - start).c_str(), user_);
          start = nl + 1;
        }
        str(s.substr(start));
        return 0;
      }

     private:
      frp_progress_fn fn_;
      void* user_;
    };
    std::unique_ptr<LineBuf> buf;
    std::unique_ptr<std::ostream> stream;
    if (progress) {
      buf = std::make_unique<LineBuf>(progress, user);
      stream = std::make_unique<std::ostream>(buf.get());
      stream->setf(std::ios::unitbuf);
      options.progress = stream.get();
    }
    const frp::RunSummary r = frp::run_experiment(config, options);
    if (summary) {
      summary->iterations = r.iterations;
      summary->final_mse = r.final_mse;
      summary->final_psnr = r.final_psnr;
      summary->mean_iteration_ms = r.mean_iteration_ms;
      summary->median_iteration_ms = r.median_iteration_ms;
      const std::string dir = r.artifacts.directory.string();
      std::snprintf(summary->output_dir, sizeof summary->output_dir, "%s", dir.c_str());
    }
  });
}

frp_status frp_config_check(const char* config_path) {
  return guarded([&] {
    require(config_path, "config_path");
    frp::parse_config(config_path).validate();
  });
}

frp_status frp_merge_checkpoint(const char* in_path, const char* out_path) {
  return guarded([&] {
    require(in_path, "in_path");
    require(out_path, "out_path");
    frp::save_checkpoint(frp::merge(frp::load_checkpoint(in_path)), out_path);
  });
}

}  // extern "C"
