#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "frp/linalg.hpp"

namespace frp {

class Rng;
struct Activation;

/// Recipe for a fixed cosine basis.
///
/// Frequencies: {1/F, 2/F, ..., 1} followed by {1, 2, ..., F}; the value 1
/// appears in both groups, so there are 2F frequencies and M = 2FP rows.
/// Phases: 2 pi p / P for p = 0..P-1.
/// Row order is phase-major: row = p * 2F + f, with f < F the low group.
/// Sampling points: input_dim points spaced uniformly over
/// [-s T_max / 2, s T_max / 2] including both endpoints, T_max = 2 pi F.
struct FourierBasisSpec {
  std::size_t frequencies = 64;  ///< F
  std::size_t phases = 16;       ///< P
  std::size_t input_dim = 2;     ///< d, the basis vector length
  double interval_scale = 1.0;   ///< s

  std::size_t basis_count() const { return 2 * frequencies * phases; }
  double max_period() const;
  void validate() const;

  friend bool operator==(const FourierBasisSpec&, const FourierBasisSpec&) = default;
};

struct RandomBasisSpec {
  std::size_t count = 0;
  std::size_t input_dim = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RandomBasisSpec&, const RandomBasisSpec&) = default;
};

/// Basis supplied directly (tests, identity bases).
struct ExplicitBasis {
  friend bool operator==(const ExplicitBasis&, const ExplicitBasis&) = default;
};

using BasisProvenance = std::variant<FourierBasisSpec, RandomBasisSpec, ExplicitBasis>;

/// Cosine/sine tables behind a Fourier basis, split at the symmetric grid's
/// midpoint. Every basis entry is cos(phi) * C - sin(phi) * S for one of
/// these table values, so products with the basis can be evaluated on the
/// 2F x d/2 tables instead of the M x d matrix.
struct FourierFactors {
  std::size_t freq_count = 0;   ///< 2F
  std::size_t even_cols = 0;    ///< ceil(d / 2): mirrored pairs plus the centre
  std::size_t odd_cols = 0;     ///< floor(d / 2): mirrored pairs
  std::vector<double> cos_phase;
  std::vector<double> sin_phase;
  Matrix cos_half;     ///< 2F x even_cols, cos(w_f z_j)
  Matrix sin_half;     ///< 2F x odd_cols,  sin(w_f z_j)
  Matrix cos_half_t;   ///< transpose(cos_half)
  Matrix sin_half_t;   ///< transpose(sin_half)
};

/// Fixed M x d basis matrix B. Immutable after construction.
class BasisMatrix {
 public:
  static BasisMatrix fourier(const FourierBasisSpec& spec);
  static BasisMatrix random(const RandomBasisSpec& spec);
  /// Wraps given values. Rejects all-zero rows.
  static BasisMatrix explicit_values(Matrix values);
  /// Wraps stored values while keeping their recorded provenance.
  static BasisMatrix restored(Matrix values, BasisProvenance provenance);

  const Matrix& values() const noexcept { return values_; }
  std::size_t count() const noexcept { return values_.rows(); }
  std::size_t input_dim() const noexcept { return values_.cols(); }
  const BasisProvenance& provenance() const noexcept { return provenance_; }
  bool is_fourier() const noexcept { return factors_ != nullptr; }
  const FourierFactors* factors() const noexcept { return factors_.get(); }

  /// Fourier bases only: grid z_j, per-row frequency and phase.
  const std::vector<double>& sampling_points() const noexcept { return points_; }
  const std::vector<double>& row_frequencies() const noexcept { return row_freq_; }
  const std::vector<double>& row_phases() const noexcept { return row_phase_; }

 private:
  BasisMatrix() = default;
  static void check_rows_nonzero(const Matrix& values);

  Matrix values_;
  BasisProvenance provenance_ = ExplicitBasis{};
  std::shared_ptr<const FourierFactors> factors_;
  std::vector<double> points_;
  std::vector<double> row_freq_;
  std::vector<double> row_phase_;
};

BasisMatrix build_fourier_basis(const FourierBasisSpec& spec);
/// Entries i.i.d. uniform on the open interval (-1, 1); requires count >= input_dim.
BasisMatrix build_random_basis(std::size_t count, std::size_t input_dim, std::uint64_t seed);

enum class ReparamMode { None, FR, RR, RIR };

std::string to_string(ReparamMode mode);
ReparamMode parse_reparam_mode(const std::string& text);

/// W = coefficients * basis. In FR and RR mode the basis is frozen; in RIR
/// mode `trainable_basis` starts as a copy of `basis` and is optimized.
struct ReparamState {
  ReparamMode mode = ReparamMode::FR;
  Matrix coefficients;                        ///< d_out x M
  std::shared_ptr<const BasisMatrix> basis;   ///< M x d_in
  Matrix trainable_basis;                     ///< RIR only

  const Matrix& basis_values() const;
  bool basis_is_trainable() const noexcept { return mode == ReparamMode::RIR; }
  void validate() const;
};

/// Uniform coefficient initialisation: column j is drawn from
/// U(-a_j, a_j) with a_j = sqrt(6 / (M * ||B_j||^2)), divided by omega0 for
/// sinusoidal activations. Draws proceed row-major.
Matrix init_coefficients(const Matrix& basis, std::size_t out_dim, const Activation& activation,
                         Rng& rng);
Matrix init_coefficients(const BasisMatrix& basis, std::size_t out_dim,
                         const Activation& activation, std::uint64_t seed);
/// The per-column bounds a_j used by init_coefficients.
std::vector<double> coefficient_bounds(const Matrix& basis, const Activation& activation);

/// W = Lambda * B (d_out x d_in).
Matrix compose_weights(const ReparamState& state);
Matrix compose_weights(const Matrix& coefficients, const BasisMatrix& basis);

/// dLambda = dW * transpose(B): the chain rule through W = Lambda B.
Matrix route_gradient(const Matrix& d_weight, const BasisMatrix& basis);
Matrix route_gradient(const Matrix& d_weight, const Matrix& basis);
/// RIR only: dB = transpose(Lambda) * dW.
Matrix basis_gradient(const Matrix& d_weight, const Matrix& coefficients);

}  // namespace frp
