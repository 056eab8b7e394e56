#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "frp/activation.hpp"
#include "frp/linalg.hpp"
#include "frp/reparam.hpp"

namespace frp {

/// gamma(x) = [sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^(L-1) pi x), cos(2^(L-1) pi x)]
/// per input coordinate, concatenated coordinate by coordinate; when
/// include_input is set each coordinate's block is prefixed by x itself.
struct PositionalEncodingSpec {
  std::size_t levels = 10;
  bool include_input = false;

  std::size_t output_dim(std::size_t input_dim) const {
    return input_dim * (2 * levels + (include_input ? 1 : 0));
  }
  void validate() const;

  friend bool operator==(const PositionalEncodingSpec&, const PositionalEncodingSpec&) = default;
};

/// Which hidden-to-hidden weight matrices are reparameterized, and how.
struct ReparamConfig {
  ReparamMode mode = ReparamMode::None;
  std::size_t frequencies = 64;  ///< F
  std::size_t phases = 16;       ///< P
  double interval_scale = 1.0;
  /// Layer indices (see NetworkSpec); empty selects every hidden-to-hidden layer.
  std::vector<std::size_t> layers;

  friend bool operator==(const ReparamConfig&, const ReparamConfig&) = default;
};

/// Architecture. Linear layers are numbered 0..hidden_widths.size():
/// layer 0 maps the (encoded) input to the first hidden width, layer n in
/// [1, H-1] maps hidden n-1 to hidden n, and layer H is the affine output.
struct NetworkSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_widths;
  std::size_t output_dim = 1;
  Activation activation;
  std::optional<PositionalEncodingSpec> encoding;
  ReparamConfig reparam;

  std::size_t layer_count() const { return hidden_widths.size() + 1; }
  std::size_t encoded_input_dim() const;
  std::size_t layer_in_dim(std::size_t layer) const;
  std::size_t layer_out_dim(std::size_t layer) const;
  /// Sorted, de-duplicated reparameterized layer indices (empty for mode none).
  std::vector<std::size_t> reparam_layer_indices() const;
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct LayerParams {
  /// Plain layers: the trained weight. Reparameterized layers: a derived
  /// snapshot of compose(reparam), refreshed by Network::sync_derived_weights().
  Matrix weight;
  std::vector<double> bias;
  std::optional<ReparamState> reparam;
};

/// An MLP with its parameters.
///
/// Every mutable access bumps a version counter; traces record the instance
/// id and version they were produced with so a stale trace is rejected.
class Network {
 public:
  /// Random initialization. Plain weights: Kaiming uniform sqrt(6/d_in) for
  /// ReLU/Tanh/Gauss; for Sin, U(-1/d_in, 1/d_in) on layer 0 and
  /// sqrt(6/d_in)/omega0 elsewhere. Biases: U(-1/sqrt(d_in), 1/sqrt(d_in)).
  /// Reparameterized layers get their basis and init_coefficients().
  static Network initialize(const NetworkSpec& spec, std::uint64_t seed);

  Network(NetworkSpec spec, std::vector<LayerParams> layers);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const NetworkSpec& spec() const noexcept { return spec_; }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  std::vector<LayerParams>& mutable_layers();

  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  /// Weight used in the forward pass of `layer`.
  Matrix effective_weight(std::size_t layer) const;
  void sync_derived_weights();

  /// Number of trainable scalars (reparameterized layers count coefficients,
  /// plus the basis in RIR mode, never the derived weight).
  std::size_t trainable_count() const;

 private:
  void validate_layers() const;

  NetworkSpec spec_;
  std::vector<LayerParams> layers_;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

/// Trainable parameter blocks in their canonical flattening order:
/// for each layer in order, the weight (or coefficients), then the basis in
/// RIR mode, then the bias; each block row-major.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};

struct ForwardTrace {
  std::uint64_t network_id = 0;
  std::uint64_t network_version = 0;
  Matrix input;                  ///< encoded input, n x layer_in_dim(0)
  std::vector<Matrix> pre;       ///< per layer, n x d_out
  std::vector<Matrix> post;      ///< per hidden layer, sigma(pre)
  std::vector<Matrix> weights;   ///< per layer, the effective weight used

  const Matrix& layer_input(std::size_t layer) const {
    return layer == 0 ? input : post[layer - 1];
  }
};

struct ForwardResult {
  Matrix output;
  ForwardTrace trace;
};

struct LayerGradient {
  Matrix weight;              ///< dL/dW of the effective weight (always filled)
  std::vector<double> bias;
  Matrix coefficients;        ///< reparameterized layers
  Matrix basis;               ///< RIR layers
};

struct GradientSet {
  std::vector<LayerGradient> layers;
};

std::vector<double> positional_encode(std::span<const double> x, const PositionalEncodingSpec& spec);
Matrix positional_encode(const Matrix& x, const PositionalEncodingSpec& spec);

ForwardResult forward(const Network& net, const Matrix& inputs);
/// Outputs only.
Matrix predict(const Network& net, const Matrix& inputs);

/// Back-propagated signals dL/d(pre-activation) for every layer, n x d_out.
std::vector<Matrix> backward_signals(const Network& net, const ForwardTrace& trace,
                                     const Matrix& d_output);
GradientSet backward(const Network& net, const ForwardTrace& trace, const Matrix& d_output);

std::vector<ParamBlock> trainable_blocks(Network& net);
/// Gradient blocks aligned with trainable_blocks().
std::vector<std::span<const double>> gradient_blocks(const Network& net, const GradientSet& grads);
std::vector<std::string> trainable_block_names(const Network& net);
/// Concatenation of gradient_blocks() in canonical order.
std::vector<double> flatten_gradient(const Network& net, const GradientSet& grads);

/// output_dim x trainable_count(); row o is the gradient of output o.
Matrix jacobian(const Network& net, std::span<const double> x);

/// Inference form: every reparameterized layer replaced by its composed
/// weight. The result has the plain architecture and no reparam state.
Network merge(const Network& net);

}  // namespace frp
