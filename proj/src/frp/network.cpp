#include "frp/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>

#include "frp/errors.hpp"
#include "frp/rng.hpp"

namespace frp {

namespace {

std::atomic<std::uint64_t> g_next_network_id{1};

std::uint64_t fresh_id() { return g_next_network_id.fetch_add(1, std::memory_order_relaxed); }

std::string layer_name(std::size_t layer) { return "layer" + std::to_string(layer); }

}  // namespace

void Activation::validate() const {
  if (type == ActivationType::Sin && !(omega0 > 0.0)) {
    throw ValidationError("sin activation requires omega0 > 0");
  }
  if (type == ActivationType::Gauss && !(spread > 0.0)) {
    throw ValidationError("gauss activation requires spread > 0");
  }
}

std::string Activation::name() const {
  switch (type) {
    case ActivationType::ReLU: return "relu";
    case ActivationType::Sin: return "sin";
    case ActivationType::Tanh: return "tanh";
    case ActivationType::Gauss: return "gauss";
  }
  return "relu";
}

ActivationType parse_activation_type(const std::string& text) {
  if (text == "relu") return ActivationType::ReLU;
  if (text == "sin") return ActivationType::Sin;
  if (text == "tanh") return ActivationType::Tanh;
  if (text == "gauss") return ActivationType::Gauss;
  throw ValidationError("unknown activation '" + text + "' (relu|sin|tanh|gauss)");
}

void PositionalEncodingSpec::validate() const {
  if (levels < 1) throw ValidationError("positional encoding needs levels >= 1");
}

std::size_t NetworkSpec::encoded_input_dim() const {
  return encoding ? encoding->output_dim(input_dim) : input_dim;
}

std::size_t NetworkSpec::layer_in_dim(std::size_t layer) const {
  return layer == 0 ? encoded_input_dim() : hidden_widths.at(layer - 1);
}

std::size_t NetworkSpec::layer_out_dim(std::size_t layer) const {
  return layer < hidden_widths.size() ? hidden_widths[layer] : output_dim;
}

std::vector<std::size_t> NetworkSpec::reparam_layer_indices() const {
  if (reparam.mode == ReparamMode::None) return {};
  std::vector<std::size_t> out;
  if (reparam.layers.empty()) {
    for (std::size_t n = 1; n < hidden_widths.size(); ++n) out.push_back(n);
  } else {
    out = reparam.layers;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw ValidationError("network: input_dim must be >= 1");
  if (output_dim < 1) throw ValidationError("network: output_dim must be >= 1");
  if (hidden_widths.empty()) throw ValidationError("network: hidden_widths must be non-empty");
  for (std::size_t w : hidden_widths)
    if (w < 1) throw ValidationError("network: hidden widths must be >= 1");
  activation.validate();
  if (encoding) encoding->validate();
  if (reparam.mode == ReparamMode::None) return;

  if (reparam.frequencies < 1 || reparam.phases < 1) {
    throw ValidationError("reparam: F and P must be >= 1");
  }
  if (!(reparam.interval_scale > 0.0)) throw ValidationError("reparam: interval_scale must be > 0");
  for (std::size_t n : reparam.layers) {
    if (n < 1 || n + 1 > hidden_widths.size()) {
      throw ValidationError("reparam: layer " + std::to_string(n) +
                            " is not a hidden-to-hidden weight matrix (valid: 1.." +
                            std::to_string(hidden_widths.size() > 1 ? hidden_widths.size() - 1 : 0) +
                            ")");
    }
  }
  const auto idx = reparam_layer_indices();
  if (idx.empty()) {
    throw ValidationError("reparam: mode " + to_string(reparam.mode) +
                          " needs at least two hidden layers");
  }
  const std::size_t m = 2 * reparam.frequencies * reparam.phases;
  for (std::size_t n : idx) {
    if (m < layer_in_dim(n)) {
      throw ValidationError("reparam: M = 2FP = " + std::to_string(m) +
                            " is smaller than layer " + std::to_string(n) + " input width " +
                            std::to_string(layer_in_dim(n)));
    }
  }
}

Network::Network(NetworkSpec spec, std::vector<LayerParams> layers)
    : spec_(std::move(spec)), layers_(std::move(layers)), id_(fresh_id()) {
  spec_.validate();
  validate_layers();
}

Network::Network(const Network& other)
    : spec_(other.spec_), layers_(other.layers_), id_(fresh_id()), version_(0) {}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    spec_ = other.spec_;
    layers_ = other.layers_;
    id_ = fresh_id();
    version_ = 0;
  }
  return *this;
}

std::vector<LayerParams>& Network::mutable_layers() {
  ++version_;
  return layers_;
}

void Network::validate_layers() const {
  if (layers_.size() != spec_.layer_count()) {
    throw ShapeError("network: expected " + std::to_string(spec_.layer_count()) + " layers, got " +
                     std::to_string(layers_.size()));
  }
  const auto reparam_idx = spec_.reparam_layer_indices();
  for (std::size_t n = 0; n < layers_.size(); ++n) {
    const LayerParams& l = layers_[n];
    const std::size_t din = spec_.layer_in_dim(n), dout = spec_.layer_out_dim(n);
    if (l.weight.rows() != dout || l.weight.cols() != din) {
      throw ShapeError(layer_name(n) + ": weight " + l.weight.shape_string() + ", expected " +
                       std::to_string(dout) + "x" + std::to_string(din));
    }
    if (l.bias.size() != dout) throw ShapeError(layer_name(n) + ": bias length mismatch");
    const bool expect_reparam =
        std::find(reparam_idx.begin(), reparam_idx.end(), n) != reparam_idx.end();
    if (expect_reparam != l.reparam.has_value()) {
      throw ValidationError(layer_name(n) + (expect_reparam ? ": missing" : ": unexpected") +
                            " reparameterization state");
    }
    if (l.reparam) {
      l.reparam->validate();
      if (l.reparam->mode != spec_.reparam.mode) {
        throw ValidationError(layer_name(n) + ": reparam mode differs from the network spec");
      }
      const Matrix& b = l.reparam->basis_values();
      if (l.reparam->coefficients.rows() != dout || b.cols() != din) {
        throw ShapeError(layer_name(n) + ": reparam shapes " +
                         l.reparam->coefficients.shape_string() + " * " + b.shape_string() +
                         " do not compose to " + std::to_string(dout) + "x" + std::to_string(din));
      }
    }
  }
}

Matrix Network::effective_weight(std::size_t layer) const {
  const LayerParams& l = layers_.at(layer);
  return l.reparam ? compose_weights(*l.reparam) : l.weight;
}

void Network::sync_derived_weights() {
  for (auto& l : layers_)
    if (l.reparam) l.weight = compose_weights(*l.reparam);
}

std::size_t Network::trainable_count() const {
  std::size_t count = 0;
  for (const auto& l : layers_) {
    if (l.reparam) {
      count += l.reparam->coefficients.size();
      if (l.reparam->basis_is_trainable()) count += l.reparam->trainable_basis.size();
    } else {
      count += l.weight.size();
    }
    count += l.bias.size();
  }
  return count;
}

Network Network::initialize(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const auto reparam_idx = spec.reparam_layer_indices();
  const Activation& act = spec.activation;
  std::map<std::size_t, std::shared_ptr<const BasisMatrix>> fourier_cache;

  std::vector<LayerParams> layers;
  layers.reserve(spec.layer_count());
  for (std::size_t n = 0; n < spec.layer_count(); ++n) {
    const std::size_t din = spec.layer_in_dim(n), dout = spec.layer_out_dim(n);
    LayerParams l;
    const bool reparam = std::find(reparam_idx.begin(), reparam_idx.end(), n) != reparam_idx.end();
    if (reparam) {
      ReparamState state;
      state.mode = spec.reparam.mode;
      const std::size_t m = 2 * spec.reparam.frequencies * spec.reparam.phases;
      if (state.mode == ReparamMode::FR) {
        auto& cached = fourier_cache[din];
        if (!cached) {
          cached = std::make_shared<const BasisMatrix>(build_fourier_basis(
              {spec.reparam.frequencies, spec.reparam.phases, din, spec.reparam.interval_scale}));
        }
        state.basis = cached;
      } else {
        state.basis = std::make_shared<const BasisMatrix>(build_random_basis(m, din, rng.next()));
      }
      if (state.mode == ReparamMode::RIR) state.trainable_basis = state.basis->values();
      state.coefficients = init_coefficients(state.basis_values(), dout, act, rng);
      l.weight = compose_weights(state);
      l.reparam = std::move(state);
    } else {
      double bound = std::sqrt(6.0 / static_cast<double>(din));
      if (act.type == ActivationType::Sin) {
        bound = n == 0 ? 1.0 / static_cast<double>(din) : bound / act.omega0;
      }
      l.weight = Matrix(dout, din);
      for (double& v : l.weight.data()) v = rng.uniform(-bound, bound);
    }
    const double bias_bound = 1.0 / std::sqrt(static_cast<double>(din));
    l.bias.resize(dout);
    for (double& v : l.bias) v = rng.uniform(-bias_bound, bias_bound);
    layers.push_back(std::move(l));
  }
  return Network(spec, std::move(layers));
}

std::vector<double> positional_encode(std::span<const double> x,
                                      const PositionalEncodingSpec& spec) {
  spec.validate();
  std::vector<double> out;
  out.reserve(spec.output_dim(x.size()));
  for (double v : x) {
    if (spec.include_input) out.push_back(v);
    double freq = std::numbers::pi;
    for (std::size_t l = 0; l < spec.levels; ++l) {
      out.push_back(std::sin(freq * v));
      out.push_back(std::cos(freq * v));
      freq *= 2.0;
    }
  }
  return out;
}

Matrix positional_encode(const Matrix& x, const PositionalEncodingSpec& spec) {
  Matrix out(x.rows(), spec.output_dim(x.cols()));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = positional_encode(x.row(i), spec);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

namespace {

Matrix activate(const Matrix& pre, const Activation& act) {
  Matrix out(pre.rows(), pre.cols());
  const auto z = pre.data();
  auto y = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) y[i] = act.value(z[i]);
  return out;
}

Matrix affine(const Matrix& a, const Matrix& w, const std::vector<double>& bias) {
  Matrix z = matmul_nt(a, w);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto row = z.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
  return z;
}

Matrix activation_derivative(const Matrix& pre, const Activation& act) {
  Matrix out(pre.rows(), pre.cols());
  const auto z = pre.data();
  auto dy = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) dy[i] = act.derivative(z[i]);
  return out;
}

}  // namespace

ForwardResult forward(const Network& net, const Matrix& inputs) {
  const NetworkSpec& spec = net.spec();
  if (inputs.cols() != spec.input_dim) {
    throw ShapeError("forward: inputs " + inputs.shape_string() + " do not have input_dim " +
                     std::to_string(spec.input_dim) + " columns");
  }
  ForwardResult r;
  ForwardTrace& t = r.trace;
  t.network_id = net.id();
  t.network_version = net.version();
  t.input = spec.encoding ? positional_encode(inputs, *spec.encoding) : inputs;
  const std::size_t count = spec.layer_count();
  t.pre.reserve(count);
  t.post.reserve(count - 1);
  t.weights.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    t.weights.push_back(net.effective_weight(n));
    t.pre.push_back(affine(t.layer_input(n), t.weights.back(), net.layers()[n].bias));
    if (n + 1 < count) t.post.push_back(activate(t.pre.back(), spec.activation));
  }
  r.output = t.pre.back();
  return r;
}

Matrix predict(const Network& net, const Matrix& inputs) { return forward(net, inputs).output; }

std::vector<Matrix> backward_signals(const Network& net, const ForwardTrace& trace,
                                     const Matrix& d_output) {
  if (trace.network_id != net.id() || trace.network_version != net.version()) {
    throw ValidationError("backward: trace does not belong to the current network parameters");
  }
  const std::size_t count = net.spec().layer_count();
  if (trace.pre.size() != count) throw ValidationError("backward: malformed trace");
  const Matrix& out = trace.pre.back();
  if (d_output.rows() != out.rows() || d_output.cols() != out.cols()) {
    throw ShapeError("backward: dLoss/dOutput " + d_output.shape_string() +
                     " does not match output " + out.shape_string());
  }
  std::vector<Matrix> signals(count);
  signals[count - 1] = d_output;
  for (std::size_t n = count - 1; n-- > 0;) {
    Matrix g = matmul(signals[n + 1], trace.weights[n + 1]);
    const Matrix deriv = activation_derivative(trace.pre[n], net.spec().activation);
    auto gd = g.data();
    const auto dd = deriv.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= dd[i];
    signals[n] = std::move(g);
  }
  return signals;
}

GradientSet backward(const Network& net, const ForwardTrace& trace, const Matrix& d_output) {
  const std::vector<Matrix> signals = backward_signals(net, trace, d_output);
  GradientSet grads;
  grads.layers.resize(signals.size());
  for (std::size_t n = 0; n < signals.size(); ++n) {
    LayerGradient& g = grads.layers[n];
    const Matrix& delta = signals[n];
    g.weight = matmul_tn(delta, trace.layer_input(n));
    g.bias.assign(delta.cols(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
      const auto row = delta.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) g.bias[j] += row[j];
    }
    const auto& reparam = net.layers()[n].reparam;
    if (!reparam) continue;
    if (reparam->mode == ReparamMode::RIR) {
      g.coefficients = route_gradient(g.weight, reparam->trainable_basis);
      g.basis = basis_gradient(g.weight, reparam->coefficients);
    } else {
      g.coefficients = route_gradient(g.weight, *reparam->basis);
    }
  }
  return grads;
}

std::vector<ParamBlock> trainable_blocks(Network& net) {
  std::vector<ParamBlock> blocks;
  auto& layers = net.mutable_layers();
  for (std::size_t n = 0; n < layers.size(); ++n) {
    LayerParams& l = layers[n];
    if (l.reparam) {
      blocks.push_back({layer_name(n) + ".coefficients", l.reparam->coefficients.data()});
      if (l.reparam->basis_is_trainable()) {
        blocks.push_back({layer_name(n) + ".basis", l.reparam->trainable_basis.data()});
      }
    } else {
      blocks.push_back({layer_name(n) + ".weight", l.weight.data()});
    }
    blocks.push_back({layer_name(n) + ".bias", l.bias});
  }
  return blocks;
}

std::vector<std::string> trainable_block_names(const Network& net) {
  std::vector<std::string> names;
  for (std::size_t n = 0; n < net.layers().size(); ++n) {
    const LayerParams& l = net.layers()[n];
    if (l.reparam) {
      names.push_back(layer_name(n) + ".coefficients");
      if (l.reparam->basis_is_trainable()) names.push_back(layer_name(n) + ".basis");
    } else {
      names.push_back(layer_name(n) + ".weight");
    }
    names.push_back(layer_name(n) + ".bias");
  }
  return names;
}

std::vector<std::span<const double>> gradient_blocks(const Network& net, const GradientSet& grads) {
  if (grads.layers.size() != net.layers().size()) {
    throw ShapeError("gradient set has " + std::to_string(grads.layers.size()) +
                     " layers, network has " + std::to_string(net.layers().size()));
  }
  std::vector<std::span<const double>> blocks;
  for (std::size_t n = 0; n < grads.layers.size(); ++n) {
    const LayerGradient& g = grads.layers[n];
    const LayerParams& l = net.layers()[n];
    if (l.reparam) {
      blocks.push_back(g.coefficients.data());
      if (l.reparam->basis_is_trainable()) blocks.push_back(g.basis.data());
    } else {
      blocks.push_back(g.weight.data());
    }
    blocks.push_back(g.bias);
  }
  return blocks;
}

std::vector<double> flatten_gradient(const Network& net, const GradientSet& grads) {
  std::vector<double> flat;
  flat.reserve(net.trainable_count());
  for (auto block : gradient_blocks(net, grads)) flat.insert(flat.end(), block.begin(), block.end());
  return flat;
}

Matrix jacobian(const Network& net, std::span<const double> x) {
  const std::size_t in = net.spec().input_dim, out = net.spec().output_dim;
  if (x.size() != in) {
    throw ShapeError("jacobian: input has " + std::to_string(x.size()) + " entries, expected " +
                     std::to_string(in));
  }
  const ForwardResult fr = forward(net, Matrix(1, in, std::vector<double>(x.begin(), x.end())));
  Matrix jac(out, net.trainable_count());
  for (std::size_t o = 0; o < out; ++o) {
    Matrix seed(1, out);
    seed(0, o) = 1.0;
    const std::vector<double> flat = flatten_gradient(net, backward(net, fr.trace, seed));
    std::copy(flat.begin(), flat.end(), jac.row(o).begin());
  }
  return jac;
}

Network merge(const Network& net) {
  NetworkSpec spec = net.spec();
  spec.reparam = ReparamConfig{};
  std::vector<LayerParams> layers;
  layers.reserve(net.layers().size());
  for (std::size_t n = 0; n < net.layers().size(); ++n) {
    LayerParams l;
    l.weight = net.effective_weight(n);
    l.bias = net.layers()[n].bias;
    layers.push_back(std::move(l));
  }
  return Network(std::move(spec), std::move(layers));
}

}  // namespace frp
