#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "frp/linalg.hpp"
#include "frp/network.hpp"
#include "frp/tasks.hpp"

namespace frp {

/// Bins k in [0, N/2] with |DFT[target](k)| above this are reported.
inline constexpr double kSpectrumThreshold = 1e-8;

struct FreqError {
  std::vector<std::size_t> bins;
  std::vector<double> delta;  ///< |G(k) - F(k)| / |G(k)| per reported bin
};

/// Relative spectral error between two sampled signals on a uniform grid.
FreqError freq_error_values(std::span<const double> target, std::span<const double> output);
/// Same, against a precomputed target spectrum.
FreqError freq_error_spectrum(const ComplexVector& target_spectrum, std::span<const double> output);
/// Same, for a scalar-output network on a uniform 1D dataset.
FreqError freq_error(const Network& net, const Dataset& data);

/// Throws unless the dataset is 1D with equally spaced ascending inputs.
void require_uniform_grid(const Dataset& data);
/// Cycles per unit of x for bin k of an n-point grid with spacing dx.
double bin_frequency(std::size_t k, std::size_t n, double dx);

/// Delta_k over training: delta[c][i] belongs to checkpoints[c], frequencies[i].
struct SpectrumReport {
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::size_t> frequencies;
  std::vector<std::vector<double>> delta;
};

/// Gradient of the per-bin loss L(k) = |E(k)|^2, E(k) = G(k) - F(k).
///
/// With w_n(k) = exp(-i 2 pi k n / N) / N this is backprop of
/// dL/df_n = -2 Re(conj(E(k)) w_n(k)). Under the 1/N convention the sum of
/// L(k) over all N bins is the MSE, and so is the sum of the gradients.
struct FreqLossGradient {
  std::size_t bin = 0;
  double loss = 0.0;
  GradientSet gradient;
};
FreqLossGradient freq_loss_gradient(const Network& net, const Dataset& data, std::size_t k);

struct BlockMagnitude {
  std::string name;
  double norm_k1 = 0.0;  ///< Frobenius norm of dL(k1)/dblock
  double norm_k2 = 0.0;
};

/// Ratios |dL(k1)/dp| / |dL(k2)/dp| for one reparameterized layer.
/// Entries whose denominator is exactly zero are counted as undefined.
struct LayerRatioReport {
  std::size_t layer = 0;
  std::vector<double> w_row_max;          ///< per row i, max_j over defined w_ij ratios (NaN if none)
  std::vector<std::size_t> w_row_undefined;
  std::vector<double> lambda_ratios;      ///< every defined lambda ratio, row-major order
  std::size_t lambda_undefined = 0;
  double lambda_min = 0.0, lambda_median = 0.0, lambda_max = 0.0;
};

struct FreqGradientReport {
  std::size_t k1 = 0, k2 = 0;
  double loss_k1 = 0.0, loss_k2 = 0.0;
  std::vector<BlockMagnitude> blocks;
  std::vector<LayerRatioReport> layers;
};

/// Requires 0 < k2 <= k1 < N.
FreqGradientReport freq_gradient_ratio_report(const Network& net, const Dataset& data,
                                              std::size_t k1, std::size_t k2);

/// K_ij = <J(x_i), J(x_j)> over the trainable parameters. For vector outputs
/// the Jacobian rows are summed over outputs first (J of sum_o f_o).
/// Computed per layer from back-propagated signals without materializing J.
Matrix empirical_ntk(const Network& net, const Matrix& inputs);
/// Reference route through jacobian(); slow, for checking.
Matrix empirical_ntk_from_jacobians(const Network& net, const Matrix& inputs);

/// `count` evenly spaced rows of the dataset's inputs (all rows if fewer).
Matrix ntk_sample_inputs(const Dataset& data, std::size_t count);

struct NTKSummary {
  std::vector<double> eigenvalues;  ///< descending
  std::vector<double> percentages;  ///< 100 lambda_i / sum(lambda)
  double pct_first = 0.0, pct_second = 0.0, pct_remaining = 0.0;
};
NTKSummary ntk_summary(const Matrix& k);

}  // namespace frp
