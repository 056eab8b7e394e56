#include "frp/reparam.hpp"

#include <cmath>
#include <numbers>

#include "frp/activation.hpp"
#include "frp/errors.hpp"
#include "frp/rng.hpp"

namespace frp {

double FourierBasisSpec::max_period() const {
  return 2.0 * std::numbers::pi * static_cast<double>(frequencies);
}

void FourierBasisSpec::validate() const {
  if (frequencies < 1) throw ValidationError("fourier basis: F must be >= 1");
  if (phases < 1) throw ValidationError("fourier basis: P must be >= 1");
  if (input_dim < 2) {
    throw ValidationError("fourier basis: input_dim must be >= 2 to place an endpoint grid, got " +
                          std::to_string(input_dim));
  }
  if (!(interval_scale > 0.0) || !std::isfinite(interval_scale)) {
    throw ValidationError("fourier basis: interval_scale must be a positive finite number");
  }
}

void BasisMatrix::check_rows_nonzero(const Matrix& values) {
  for (std::size_t i = 0; i < values.rows(); ++i) {
    bool nonzero = false;
    for (double v : values.row(i)) nonzero = nonzero || v != 0.0;
    if (!nonzero) throw ValidationError("basis row " + std::to_string(i) + " is all zeros");
  }
}

BasisMatrix BasisMatrix::fourier(const FourierBasisSpec& spec) {
  spec.validate();
  const std::size_t n_freq = 2 * spec.frequencies;
  const std::size_t d = spec.input_dim;
  const std::size_t m = spec.basis_count();
  const double f = static_cast<double>(spec.frequencies);

  std::vector<double> omega(n_freq);
  for (std::size_t k = 0; k < spec.frequencies; ++k) {
    omega[k] = static_cast<double>(k + 1) / f;
    omega[spec.frequencies + k] = static_cast<double>(k + 1);
  }

  // Endpoint-inclusive grid, built from the left half and mirrored so that
  // z_j == -z_{d-1-j} holds exactly.
  const double half_width = 0.5 * spec.interval_scale * spec.max_period();
  const double step = 2.0 * half_width / static_cast<double>(d - 1);
  std::vector<double> z(d, 0.0);
  for (std::size_t j = 0; j < d / 2; ++j) {
    z[j] = -half_width + static_cast<double>(j) * step;
    z[d - 1 - j] = -z[j];
  }

  auto factors = std::make_shared<FourierFactors>();
  factors->freq_count = n_freq;
  factors->even_cols = (d + 1) / 2;
  factors->odd_cols = d / 2;
  factors->cos_half = Matrix(n_freq, factors->even_cols);
  factors->sin_half = Matrix(n_freq, factors->odd_cols);
  for (std::size_t k = 0; k < n_freq; ++k) {
    for (std::size_t j = 0; j < factors->even_cols; ++j) {
      factors->cos_half(k, j) = std::cos(omega[k] * z[j]);
    }
    for (std::size_t j = 0; j < factors->odd_cols; ++j) {
      factors->sin_half(k, j) = std::sin(omega[k] * z[j]);
    }
  }
  factors->cos_half_t = transpose(factors->cos_half);
  factors->sin_half_t = transpose(factors->sin_half);

  factors->cos_phase.resize(spec.phases);
  factors->sin_phase.resize(spec.phases);
  for (std::size_t p = 0; p < spec.phases; ++p) {
    const double phi =
        2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(spec.phases);
    factors->cos_phase[p] = p == 0 ? 1.0 : std::cos(phi);
    factors->sin_phase[p] = p == 0 ? 0.0 : std::sin(phi);
  }

  // b = cos(w z + phi) = cos(phi) cos(w z) - sin(phi) sin(w z), evaluated
  // from the same tables the factored products use.
  BasisMatrix out;
  out.values_ = Matrix(m, d);
  out.row_freq_.resize(m);
  out.row_phase_.resize(m);
  for (std::size_t p = 0; p < spec.phases; ++p) {
    const double cp = factors->cos_phase[p];
    const double sp = factors->sin_phase[p];
    for (std::size_t k = 0; k < n_freq; ++k) {
      const std::size_t row = p * n_freq + k;
      out.row_freq_[row] = omega[k];
      out.row_phase_[row] =
          2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(spec.phases);
      for (std::size_t j = 0; j < d; ++j) {
        const bool mirrored = j >= factors->even_cols;
        const std::size_t jj = mirrored ? d - 1 - j : j;
        const double c = factors->cos_half(k, jj);
        double s = 0.0;
        if (jj < factors->odd_cols) s = mirrored ? -factors->sin_half(k, jj) : factors->sin_half(k, jj);
        out.values_(row, j) = cp * c - sp * s;
      }
    }
  }
  check_rows_nonzero(out.values_);
  out.provenance_ = spec;
  out.factors_ = std::move(factors);
  out.points_ = std::move(z);
  return out;
}

BasisMatrix BasisMatrix::random(const RandomBasisSpec& spec) {
  if (spec.count < 1 || spec.input_dim < 1) {
    throw ValidationError("random basis: count and input_dim must be >= 1");
  }
  if (spec.count < spec.input_dim) {
    throw ValidationError("random basis: need count >= input_dim for an over-complete basis (" +
                          std::to_string(spec.count) + " < " + std::to_string(spec.input_dim) +
                          ")");
  }
  Rng rng(spec.seed);
  BasisMatrix out;
  out.values_ = Matrix(spec.count, spec.input_dim);
  for (std::size_t i = 0; i < spec.count; ++i) {
    auto row = out.values_.row(i);
    bool nonzero = false;
    while (!nonzero) {
      for (double& v : row) {
        v = rng.open_uniform(-1.0, 1.0);
        nonzero = nonzero || v != 0.0;
      }
    }
  }
  out.provenance_ = spec;
  return out;
}

BasisMatrix BasisMatrix::explicit_values(Matrix values) {
  return restored(std::move(values), ExplicitBasis{});
}

BasisMatrix BasisMatrix::restored(Matrix values, BasisProvenance provenance) {
  if (values.empty()) throw ValidationError("basis matrix is empty");
  if (const auto* f = std::get_if<FourierBasisSpec>(&provenance)) {
    // Fourier bases are always rebuilt from their recipe.
    BasisMatrix rebuilt = fourier(*f);
    if (rebuilt.values_.rows() != values.rows() || rebuilt.values_.cols() != values.cols()) {
      throw ShapeError("stored fourier basis " + values.shape_string() +
                       " does not match its recipe " + rebuilt.values_.shape_string());
    }
    return rebuilt;
  }
  check_rows_nonzero(values);
  BasisMatrix out;
  out.values_ = std::move(values);
  out.provenance_ = std::move(provenance);
  return out;
}

BasisMatrix build_fourier_basis(const FourierBasisSpec& spec) { return BasisMatrix::fourier(spec); }

BasisMatrix build_random_basis(std::size_t count, std::size_t input_dim, std::uint64_t seed) {
  return BasisMatrix::random({count, input_dim, seed});
}

std::string to_string(ReparamMode mode) {
  switch (mode) {
    case ReparamMode::None: return "none";
    case ReparamMode::FR: return "fr";
    case ReparamMode::RR: return "rr";
    case ReparamMode::RIR: return "rir";
  }
  return "none";
}

ReparamMode parse_reparam_mode(const std::string& text) {
  if (text == "none") return ReparamMode::None;
  if (text == "fr") return ReparamMode::FR;
  if (text == "rr") return ReparamMode::RR;
  if (text == "rir") return ReparamMode::RIR;
  throw ValidationError("unknown reparameterization mode '" + text + "' (none|fr|rr|rir)");
}

const Matrix& ReparamState::basis_values() const {
  return mode == ReparamMode::RIR ? trainable_basis : basis->values();
}

void ReparamState::validate() const {
  if (mode == ReparamMode::None) throw ValidationError("reparam state with mode none");
  if (!basis) throw ValidationError("reparam state without a basis");
  const Matrix& b = basis_values();
  if (coefficients.cols() != b.rows()) {
    throw ShapeError("coefficients " + coefficients.shape_string() + " do not match basis " +
                     b.shape_string());
  }
  if (b.rows() < b.cols()) {
    throw ValidationError("basis must be over-complete (M >= d_in), got " + b.shape_string());
  }
}

std::vector<double> coefficient_bounds(const Matrix& basis, const Activation& activation) {
  const double m = static_cast<double>(basis.rows());
  std::vector<double> bounds(basis.rows());
  for (std::size_t j = 0; j < basis.rows(); ++j) {
    double sq = 0.0;
    for (double v : basis.row(j)) sq += v * v;
    if (sq == 0.0) {
      throw ValidationError("init_coefficients: basis row " + std::to_string(j) +
                            " has zero norm");
    }
    double a = std::sqrt(6.0 / (m * sq));
    if (activation.type == ActivationType::Sin) a /= activation.omega0;
    bounds[j] = a;
  }
  return bounds;
}

Matrix init_coefficients(const Matrix& basis, std::size_t out_dim, const Activation& activation,
                         Rng& rng) {
  const std::vector<double> bounds = coefficient_bounds(basis, activation);
  Matrix lambda(out_dim, basis.rows());
  for (std::size_t i = 0; i < out_dim; ++i)
    for (std::size_t j = 0; j < basis.rows(); ++j)
      lambda(i, j) = rng.uniform(-bounds[j], bounds[j]);
  return lambda;
}

Matrix init_coefficients(const BasisMatrix& basis, std::size_t out_dim,
                         const Activation& activation, std::uint64_t seed) {
  Rng rng(seed);
  return init_coefficients(basis.values(), out_dim, activation, rng);
}

namespace {

void check_compose_shapes(const Matrix& coefficients, const Matrix& basis) {
  if (coefficients.cols() != basis.rows()) {
    throw ShapeError("compose_weights: coefficients " + coefficients.shape_string() +
                     " incompatible with basis " + basis.shape_string());
  }
}

// W = L B with B = cos(phi) C - sin(phi) S (phase-major rows):
//   W = Lc C - Ls S,  Lc = sum_p cos(phi_p) L_p,  Ls = sum_p sin(phi_p) L_p,
// and on the mirrored grid C is even and S odd, so column pairs (j, d-1-j)
// share one product each.
Matrix compose_fourier(const Matrix& lambda, const FourierFactors& fx, std::size_t d) {
  const std::size_t rows = lambda.rows();
  const std::size_t nf = fx.freq_count;
  const std::size_t phases = fx.cos_phase.size();
  Matrix lc(rows, nf), ls(rows, nf);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto src = lambda.row(i);
    auto c_row = lc.row(i);
    auto s_row = ls.row(i);
    for (std::size_t p = 0; p < phases; ++p) {
      const double cp = fx.cos_phase[p], sp = fx.sin_phase[p];
      const double* blk = src.data() + p * nf;
      for (std::size_t k = 0; k < nf; ++k) {
        c_row[k] += cp * blk[k];
        s_row[k] += sp * blk[k];
      }
    }
  }
  const Matrix even = matmul(lc, fx.cos_half);
  Matrix w(rows, d);
  if (fx.odd_cols == 0) {
    for (std::size_t i = 0; i < rows; ++i) w(i, 0) = even(i, 0);
    return w;
  }
  const Matrix odd = matmul(ls, fx.sin_half);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < fx.odd_cols; ++j) {
      w(i, j) = even(i, j) - odd(i, j);
      w(i, d - 1 - j) = even(i, j) + odd(i, j);
    }
    if (fx.even_cols > fx.odd_cols) w(i, fx.odd_cols) = even(i, fx.odd_cols);
  }
  return w;
}

Matrix route_fourier(const Matrix& dw, const FourierFactors& fx) {
  const std::size_t rows = dw.rows();
  const std::size_t d = dw.cols();
  const std::size_t nf = fx.freq_count;
  const std::size_t phases = fx.cos_phase.size();
  Matrix plus(rows, fx.even_cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < fx.odd_cols; ++j) plus(i, j) = dw(i, j) + dw(i, d - 1 - j);
    if (fx.even_cols > fx.odd_cols) plus(i, fx.odd_cols) = dw(i, fx.odd_cols);
  }
  const Matrix gc = matmul(plus, fx.cos_half_t);
  Matrix gs;
  if (fx.odd_cols > 0) {
    Matrix minus(rows, fx.odd_cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < fx.odd_cols; ++j) minus(i, j) = dw(i, j) - dw(i, d - 1 - j);
    gs = matmul(minus, fx.sin_half_t);
  }
  Matrix out(rows, phases * nf);
  for (std::size_t i = 0; i < rows; ++i) {
    auto dst = out.row(i);
    const auto c_row = gc.row(i);
    for (std::size_t p = 0; p < phases; ++p) {
      const double cp = fx.cos_phase[p], sp = fx.sin_phase[p];
      double* blk = dst.data() + p * nf;
      if (gs.empty()) {
        for (std::size_t k = 0; k < nf; ++k) blk[k] = cp * c_row[k];
      } else {
        const auto s_row = gs.row(i);
        for (std::size_t k = 0; k < nf; ++k) blk[k] = cp * c_row[k] - sp * s_row[k];
      }
    }
  }
  return out;
}

}  // namespace

Matrix compose_weights(const Matrix& coefficients, const BasisMatrix& basis) {
  check_compose_shapes(coefficients, basis.values());
  if (const FourierFactors* fx = basis.factors()) {
    return compose_fourier(coefficients, *fx, basis.input_dim());
  }
  return matmul(coefficients, basis.values());
}

Matrix compose_weights(const ReparamState& state) {
  if (!state.basis) throw ValidationError("compose_weights: state has no basis");
  if (state.mode == ReparamMode::RIR) {
    check_compose_shapes(state.coefficients, state.trainable_basis);
    return matmul(state.coefficients, state.trainable_basis);
  }
  return compose_weights(state.coefficients, *state.basis);
}

Matrix route_gradient(const Matrix& d_weight, const BasisMatrix& basis) {
  if (d_weight.cols() != basis.input_dim()) {
    throw ShapeError("route_gradient: dW " + d_weight.shape_string() + " incompatible with basis " +
                     basis.values().shape_string());
  }
  if (const FourierFactors* fx = basis.factors()) return route_fourier(d_weight, *fx);
  return matmul_nt(d_weight, basis.values());
}

Matrix route_gradient(const Matrix& d_weight, const Matrix& basis) {
  if (d_weight.cols() != basis.cols()) {
    throw ShapeError("route_gradient: dW " + d_weight.shape_string() + " incompatible with basis " +
                     basis.shape_string());
  }
  return matmul_nt(d_weight, basis);
}

Matrix basis_gradient(const Matrix& d_weight, const Matrix& coefficients) {
  if (d_weight.rows() != coefficients.rows()) {
    throw ShapeError("basis_gradient: dW " + d_weight.shape_string() +
                     " incompatible with coefficients " + coefficients.shape_string());
  }
  return matmul_tn(coefficients, d_weight);
}

}  // namespace frp
