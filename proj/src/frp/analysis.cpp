#include "frp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "frp/errors.hpp"

namespace frp {

FreqError freq_error_values(std::span<const double> target, std::span<const double> output) {
  if (target.size() != output.size() || target.empty()) {
    throw ShapeError("freq_error: target has " + std::to_string(target.size()) +
                     " samples, output " + std::to_string(output.size()));
  }
  return freq_error_spectrum(dft(target), output);
}

FreqError freq_error_spectrum(const ComplexVector& g, std::span<const double> output) {
  if (g.size() != output.size() || output.empty()) {
    throw ShapeError("freq_error: spectrum has " + std::to_string(g.size()) + " bins, output " +
                     std::to_string(output.size()) + " samples");
  }
  const ComplexVector f = dft(output);
  FreqError r;
  for (std::size_t k = 0; k <= output.size() / 2; ++k) {
    const double mag = g.magnitude(k);
    if (!(mag > kSpectrumThreshold)) continue;
    r.bins.push_back(k);
    r.delta.push_back(std::hypot(g.re[k] - f.re[k], g.im[k] - f.im[k]) / mag);
  }
  return r;
}

void require_uniform_grid(const Dataset& data) {
  if (data.domain != DomainTag::Function1D || data.inputs.cols() != 1) {
    throw ValidationError("spectral diagnostics need a 1D function dataset");
  }
  const std::size_t n = data.size();
  if (n < 2) throw ValidationError("spectral diagnostics need at least 2 samples");
  const double dx = data.inputs(1, 0) - data.inputs(0, 0);
  if (!(dx > 0.0)) throw ValidationError("grid is not ascending");
  for (std::size_t i = 1; i < n; ++i) {
    const double step = data.inputs(i, 0) - data.inputs(i - 1, 0);
    if (std::abs(step - dx) > 1e-9 * dx) {
      throw ValidationError("grid is not uniform (spacing changes at sample " + std::to_string(i) +
                            ")");
    }
  }
}

double bin_frequency(std::size_t k, std::size_t n, double dx) {
  return static_cast<double>(k) / (static_cast<double>(n) * dx);
}

namespace {

std::vector<double> column(const Matrix& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = m(i, c);
  return out;
}

void require_scalar_output(const Network& net, const char* what) {
  if (net.spec().output_dim != 1) {
    throw ValidationError(std::string(what) + " needs a scalar-output network");
  }
}

}  // namespace

FreqError freq_error(const Network& net, const Dataset& data) {
  require_uniform_grid(data);
  require_scalar_output(net, "freq_error");
  const Matrix pred = predict(net, data.inputs);
  return freq_error_values(column(data.targets, 0), column(pred, 0));
}

FreqLossGradient freq_loss_gradient(const Network& net, const Dataset& data, std::size_t k) {
  require_uniform_grid(data);
  require_scalar_output(net, "freq_loss_gradient");
  const std::size_t n = data.size();
  if (k >= n) {
    throw ValidationError("bin " + std::to_string(k) + " out of range for " + std::to_string(n) +
                          " samples");
  }
  const ForwardResult fr = forward(net, data.inputs);
  const ComplexVector g = dft(column(data.targets, 0));
  const ComplexVector f = dft(column(fr.output, 0));
  const double er = g.re[k] - f.re[k], ei = g.im[k] - f.im[k];

  Matrix d_out(n, 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * j) % n) * inv_n;
    const double re_w = std::cos(angle) * inv_n;
    const double im_w = -std::sin(angle) * inv_n;
    d_out(j, 0) = -2.0 * (er * re_w + ei * im_w);
  }
  FreqLossGradient r;
  r.bin = k;
  r.loss = er * er + ei * ei;
  r.gradient = backward(net, fr.trace, d_out);
  return r;
}

namespace {

double block_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

FreqGradientReport freq_gradient_ratio_report(const Network& net, const Dataset& data,
                                              std::size_t k1, std::size_t k2) {
  if (k2 == 0 || k1 < k2) {
    throw ValidationError("ratio report needs 0 < k2 <= k1 (got k1=" + std::to_string(k1) +
                          ", k2=" + std::to_string(k2) + ")");
  }
  const FreqLossGradient g1 = freq_loss_gradient(net, data, k1);
  const FreqLossGradient g2 = freq_loss_gradient(net, data, k2);
  FreqGradientReport rep;
  rep.k1 = k1;
  rep.k2 = k2;
  rep.loss_k1 = g1.loss;
  rep.loss_k2 = g2.loss;

  const auto names = trainable_block_names(net);
  const auto b1 = gradient_blocks(net, g1.gradient);
  const auto b2 = gradient_blocks(net, g2.gradient);
  for (std::size_t b = 0; b < names.size(); ++b) {
    rep.blocks.push_back({names[b], block_norm(b1[b]), block_norm(b2[b])});
  }

  for (std::size_t n = 0; n < net.layers().size(); ++n) {
    if (!net.layers()[n].reparam) continue;
    LayerRatioReport lr;
    lr.layer = n;
    const Matrix& w1 = g1.gradient.layers[n].weight;
    const Matrix& w2 = g2.gradient.layers[n].weight;
    for (std::size_t i = 0; i < w1.rows(); ++i) {
      double best = std::numeric_limits<double>::quiet_NaN();
      std::size_t undefined = 0;
      for (std::size_t j = 0; j < w1.cols(); ++j) {
        if (w2(i, j) == 0.0) {
          ++undefined;
          continue;
        }
        const double ratio = std::abs(w1(i, j) / w2(i, j));
        if (std::isnan(best) || ratio > best) best = ratio;
      }
      lr.w_row_max.push_back(best);
      lr.w_row_undefined.push_back(undefined);
    }
    const auto l1 = g1.gradient.layers[n].coefficients.data();
    const auto l2 = g2.gradient.layers[n].coefficients.data();
    for (std::size_t i = 0; i < l1.size(); ++i) {
      if (l2[i] == 0.0) {
        ++lr.lambda_undefined;
      } else {
        lr.lambda_ratios.push_back(std::abs(l1[i] / l2[i]));
      }
    }
    if (!lr.lambda_ratios.empty()) {
      std::vector<double> sorted = lr.lambda_ratios;
      std::sort(sorted.begin(), sorted.end());
      lr.lambda_min = sorted.front();
      lr.lambda_max = sorted.back();
      const std::size_t mid = sorted.size() / 2;
      lr.lambda_median =
          sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    } else {
      lr.lambda_min = lr.lambda_median = lr.lambda_max = std::numeric_limits<double>::quiet_NaN();
    }
    rep.layers.push_back(std::move(lr));
  }
  return rep;
}

namespace {

void hadamard_accumulate(Matrix& k, const Matrix& a, const Matrix& b) {
  auto kd = k.data();
  const auto ad = a.data(), bd = b.data();
  for (std::size_t i = 0; i < kd.size(); ++i) kd[i] += ad[i] * bd[i];
}

void add_into(Matrix& k, const Matrix& a) {
  auto kd = k.data();
  const auto ad = a.data();
  for (std::size_t i = 0; i < kd.size(); ++i) kd[i] += ad[i];
}

Matrix symmetrized(const Matrix& k) {
  Matrix out = k;
  for (std::size_t i = 0; i < k.rows(); ++i) {
    for (std::size_t j = i + 1; j < k.cols(); ++j) out(j, i) = out(i, j);
  }
  for (double v : out.data()) {
    if (!std::isfinite(v)) throw NumericError("empirical NTK has non-finite entries");
  }
  return out;
}

}  // namespace

Matrix empirical_ntk(const Network& net, const Matrix& inputs) {
  const ForwardResult fr = forward(net, inputs);
  const std::size_t n = inputs.rows();
  const Matrix ones(n, net.spec().output_dim, 1.0);
  const std::vector<Matrix> signals = backward_signals(net, fr.trace, ones);

  Matrix k(n, n);
  for (std::size_t layer = 0; layer < signals.size(); ++layer) {
    const Matrix& delta = signals[layer];
    const Matrix& x = fr.trace.layer_input(layer);
    const Matrix dd = matmul_nt(delta, delta);
    const auto& reparam = net.layers()[layer].reparam;
    if (!reparam) {
      hadamard_accumulate(k, dd, matmul_nt(x, x));
    } else {
      const Matrix z = matmul_nt(x, reparam->basis_values());
      hadamard_accumulate(k, dd, matmul_nt(z, z));
      if (reparam->basis_is_trainable()) {
        const Matrix u = matmul(delta, reparam->coefficients);
        hadamard_accumulate(k, matmul_nt(u, u), matmul_nt(x, x));
      }
    }
    add_into(k, dd);
  }
  return symmetrized(k);
}

Matrix empirical_ntk_from_jacobians(const Network& net, const Matrix& inputs) {
  const std::size_t n = inputs.rows();
  Matrix j(n, net.trainable_count());
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix ji = jacobian(net, inputs.row(i));
    for (std::size_t o = 0; o < ji.rows(); ++o) {
      for (std::size_t p = 0; p < ji.cols(); ++p) j(i, p) += ji(o, p);
    }
  }
  return symmetrized(matmul_nt(j, j));
}

Matrix ntk_sample_inputs(const Dataset& data, std::size_t count) {
  const std::size_t n = data.size();
  if (count < 1) throw ValidationError("ntk sample count must be >= 1");
  if (count >= n) return data.inputs;
  Matrix out(count, data.inputs.cols());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src =
        count == 1 ? 0
                   : static_cast<std::size_t>(std::llround(static_cast<double>(i) *
                                                           static_cast<double>(n - 1) /
                                                           static_cast<double>(count - 1)));
    const auto row = data.inputs.row(src);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

NTKSummary ntk_summary(const Matrix& k) {
  NTKSummary s;
  s.eigenvalues = sym_eig(k);
  double total = 0.0;
  for (double v : s.eigenvalues) total += v;
  if (!(total > 0.0)) throw ValidationError("ntk_summary: eigenvalue sum is not positive");
  for (double v : s.eigenvalues) s.percentages.push_back(100.0 * v / total);
  s.pct_first = s.percentages[0];
  s.pct_second = s.percentages.size() > 1 ? s.percentages[1] : 0.0;
  for (std::size_t i = 2; i < s.percentages.size(); ++i) s.pct_remaining += s.percentages[i];
  return s;
}

}  // namespace frp
