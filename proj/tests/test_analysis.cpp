#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "frp/analysis.hpp"
#include "frp/errors.hpp"
#include "frp/optim.hpp"
#include "oracles.hpp"

using frp::Matrix;

namespace {

frp::Network small_net(frp::ReparamMode mode, std::uint64_t seed, std::size_t out = 1) {
  frp::NetworkSpec s;
  s.hidden_widths = {8, 8, 8};
  s.output_dim = out;
  s.activation = frp::Activation::tanh();
  s.reparam.mode = mode;
  s.reparam.frequencies = 2;
  s.reparam.phases = 2;
  return frp::Network::initialize(s, seed);
}

std::vector<double> column(const Matrix& m) { return {m.data().begin(), m.data().end()}; }

}  // namespace

TEST_CASE("relative spectral error basics") {
  const auto d = frp::make_dataset_1d(300);
  const auto t = column(d.targets);
  const auto same = frp::freq_error_values(t, t);
  for (double v : same.delta) CHECK(v == 0.0);
  const auto zero = frp::freq_error_values(t, std::vector<double>(t.size(), 0.0));
  for (double v : zero.delta) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  frp::Rng rng(2);
  std::vector<double> o(t.size());
  for (auto& v : o) v = rng.uniform(-3, 3);
  const auto base = frp::freq_error_values(t, o);
  auto t2 = t, o2 = o;
  for (auto& v : t2) v *= 7.5;
  for (auto& v : o2) v *= 7.5;
  const auto scaled = frp::freq_error_values(t2, o2);
  REQUIRE(scaled.bins == base.bins);
  for (std::size_t i = 0; i < base.delta.size(); ++i) {
    CHECK(scaled.delta[i] == doctest::Approx(base.delta[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(frp::freq_error_values(t, std::vector<double>(3)), frp::ShapeError);
}

TEST_CASE("target spectrum peaks") {
  const auto d = frp::make_dataset_1d(300);
  const auto spec = frp::dft(column(d.targets));
  std::vector<std::size_t> k(150);
  std::iota(k.begin(), k.end(), 1);
  std::sort(k.begin(), k.end(), [&](auto a, auto b) { return spec.magnitude(a) > spec.magnitude(b); });
  std::vector<std::size_t> top(k.begin(), k.begin() + 4);
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<std::size_t>{3, 5, 7, 9});
  const auto err = frp::freq_error_values(column(d.targets), std::vector<double>(300, 0.0));
  for (std::size_t b : {3u, 5u, 7u, 9u}) {
    CHECK(std::find(err.bins.begin(), err.bins.end(), b) != err.bins.end());
  }
  CHECK(std::find(err.bins.begin(), err.bins.end(), 0u) == err.bins.end());
  CHECK(err.bins.back() <= 150);
}

TEST_CASE("grid checks and bin frequency") {
  CHECK(frp::bin_frequency(3, 300, 2.0 / 299) == doctest::Approx(3.0 / (300 * 2.0 / 299)));
  CHECK_NOTHROW(frp::require_uniform_grid(frp::make_dataset_1d(50)));
  auto d = frp::make_dataset_1d(50);
  d.inputs(10, 0) += 0.01;
  CHECK_THROWS_AS(frp::require_uniform_grid(d), frp::ValidationError);
  frp::Image img{2, 2, 1, {0, 0, 0, 0}};
  CHECK_THROWS_AS(frp::require_uniform_grid(frp::make_dataset_2d(img)), frp::ValidationError);
}

TEST_CASE("per-bin losses and gradients sum to the mse") {
  const auto net = small_net(frp::ReparamMode::FR, 1);
  const auto d = frp::make_dataset_1d(24);
  const auto fr = frp::forward(net, d.inputs);
  const auto ml = frp::mse_loss(fr.output, d.targets);
  const auto full = frp::flatten_gradient(net, frp::backward(net, fr.trace, ml.gradient));
  std::vector<double> sum(full.size(), 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k < 24; ++k) {
    const auto g = frp::freq_loss_gradient(net, d, k);
    CHECK(g.bin == k);
    loss += g.loss;
    const auto flat = frp::flatten_gradient(net, g.gradient);
    for (std::size_t i = 0; i < flat.size(); ++i) sum[i] += flat[i];
  }
  CHECK(loss == doctest::Approx(ml.loss).epsilon(1e-12));
  for (std::size_t i = 0; i < full.size(); ++i) CHECK(std::abs(sum[i] - full[i]) <= 1e-12 * (1 + std::abs(full[i])));
  CHECK_THROWS_AS(frp::freq_loss_gradient(net, d, 24), frp::ValidationError);
}

TEST_CASE("per-bin gradient matches central differences") {
  for (auto mode : {frp::ReparamMode::None, frp::ReparamMode::FR}) {
    auto net = small_net(mode, 3);
    const auto d = frp::make_dataset_1d(16);
    for (std::size_t k : {1u, 3u, 7u}) {
      const auto g = frp::flatten_gradient(net, frp::freq_loss_gradient(net, d, k).gradient);
      const auto fd = oracle::finite_difference_gradient(net, [&] {
        std::vector<double> e = column(d.targets);
        const auto out = frp::predict(net, d.inputs);
        for (std::size_t n = 0; n < e.size(); ++n) e[n] -= out(n, 0);
        std::vector<double> re, im;
        oracle::direct_dft(e, re, im);
        return re[k] * re[k] + im[k] * im[k];
      });
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(oracle::rel_err(g[i], fd[i]) <= 1e-5);
    }
  }
}

TEST_CASE("ratio report") {
  const auto net = small_net(frp::ReparamMode::FR, 5);
  const auto d = frp::make_dataset_1d(40);
  const auto same = frp::freq_gradient_ratio_report(net, d, 4, 4);
  REQUIRE(same.layers.size() == 2);
  for (const auto& l : same.layers) {
    for (double r : l.lambda_ratios) CHECK(r == 1.0);
    for (double r : l.w_row_max) {
      if (!std::isnan(r)) CHECK(r == 1.0);
    }
  }
  const auto rep = frp::freq_gradient_ratio_report(net, d, 9, 3);
  CHECK(rep.k1 == 9);
  CHECK(rep.k2 == 3);
  const auto g9 = frp::freq_loss_gradient(net, d, 9);
  const auto g3 = frp::freq_loss_gradient(net, d, 3);
  CHECK(rep.loss_k1 == g9.loss);
  const auto& l1 = rep.layers[0];
  CHECK(l1.layer == 1);
  const Matrix& c9 = g9.gradient.layers[1].coefficients;
  const Matrix& c3 = g3.gradient.layers[1].coefficients;
  std::vector<double> expected;
  for (std::size_t i = 0; i < c9.data().size(); ++i) {
    if (c3.data()[i] != 0.0) expected.push_back(std::abs(c9.data()[i]) / std::abs(c3.data()[i]));
  }
  CHECK(l1.lambda_ratios == expected);
  CHECK(l1.lambda_min == *std::min_element(expected.begin(), expected.end()));
  CHECK(l1.lambda_max == *std::max_element(expected.begin(), expected.end()));
  CHECK_THROWS_AS(frp::freq_gradient_ratio_report(net, d, 3, 9), frp::ValidationError);
  CHECK_THROWS_AS(frp::freq_gradient_ratio_report(net, d, 3, 0), frp::ValidationError);
}

TEST_CASE("ntk agrees with the jacobian route") {
  frp::Rng rng(8);
  for (auto mode : {frp::ReparamMode::None, frp::ReparamMode::FR, frp::ReparamMode::RR, frp::ReparamMode::RIR}) {
    for (std::size_t out : {1u, 3u}) {
      const auto net = small_net(mode, 2, out);
      const Matrix x = oracle::random_matrix(12, 1, rng);
      const Matrix a = frp::empirical_ntk(net, x);
      const Matrix b = frp::empirical_ntk_from_jacobians(net, x);
      double scale = 0.0;
      for (double v : b.data()) scale = std::max(scale, std::abs(v));
      CHECK(frp::max_abs_diff(a, b) <= 1e-10 * scale);
      CHECK(a == frp::transpose(a));
      const auto eig = frp::sym_eig(a);
      CHECK(eig.back() >= -1e-10 * eig.front());
    }
  }
}

TEST_CASE("ntk of a single-output net is a gram matrix of gradients") {
  const auto net = small_net(frp::ReparamMode::None, 4);
  const Matrix x = Matrix::from_rows({{-0.3}, {0.6}});
  const Matrix k = frp::empirical_ntk(net, x);
  const Matrix j0 = frp::jacobian(net, x.row(0));
  const Matrix j1 = frp::jacobian(net, x.row(1));
  double k01 = 0.0;
  for (std::size_t p = 0; p < j0.cols(); ++p) k01 += j0(0, p) * j1(0, p);
  CHECK(k(0, 1) == doctest::Approx(k01).epsilon(1e-12));
}

TEST_CASE("ntk sample inputs") {
  const auto d = frp::make_dataset_1d(300);
  const Matrix s = frp::ntk_sample_inputs(d, 64);
  REQUIRE(s.rows() == 64);
  CHECK(s(0, 0) == -1.0);
  CHECK(s(63, 0) == 1.0);
  CHECK(frp::ntk_sample_inputs(d, 1000).rows() == 300);
}

TEST_CASE("ntk summary") {
  const auto id = frp::ntk_summary(Matrix::identity(10));
  for (double p : id.percentages) CHECK(p == doctest::Approx(10.0));
  CHECK(id.pct_first == doctest::Approx(10.0));
  CHECK(id.pct_second == doctest::Approx(10.0));
  CHECK(id.pct_remaining == doctest::Approx(80.0));
  const auto two = frp::ntk_summary(Matrix::from_rows({{1, 0}, {0, 3}}));
  CHECK(two.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(two.pct_first == doctest::Approx(75.0));
  CHECK(two.pct_second == doctest::Approx(25.0));
  CHECK(two.pct_remaining == doctest::Approx(0.0));
  CHECK_THROWS_AS(frp::ntk_summary(Matrix(3, 3)), frp::ValidationError);
}

TEST_CASE("zero spectral error gives a zero gradient") {
  const auto net = small_net(frp::ReparamMode::FR, 6);
  auto d = frp::make_dataset_1d(16);
  d.targets = frp::predict(net, d.inputs);
  for (std::size_t k : {0u, 3u, 8u}) {
    const auto g = frp::freq_loss_gradient(net, d, k);
    CHECK(std::abs(g.loss) <= 1e-30);
    for (double v : frp::flatten_gradient(net, g.gradient)) CHECK(std::abs(v) <= 1e-15);
  }
}

TEST_CASE("ntk percentages sum to 100") {
  const auto net = small_net(frp::ReparamMode::RR, 9);
  const auto s = frp::ntk_summary(frp::empirical_ntk(net, frp::ntk_sample_inputs(frp::make_dataset_1d(50), 20)));
  double total = 0.0;
  for (double p : s.percentages) total += p;
  CHECK(std::abs(total - 100.0) <= 1e-9);
  CHECK(std::abs(s.pct_first + s.pct_second + s.pct_remaining - 100.0) <= 1e-9);
  CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
}

TEST_CASE("ratio report on the 1d configuration after training") {
  frp::NetworkSpec s;
  s.hidden_widths = {128, 128, 128, 128};
  s.reparam.mode = frp::ReparamMode::FR;
  auto net = frp::Network::initialize(s, 0);
  const auto d = frp::make_dataset_1d(300);
  frp::AdamState st;
  frp::AdamHyper h;
  h.lr = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const auto fr = frp::forward(net, d.inputs);
    frp::adam_step(net, frp::backward(net, fr.trace, frp::mse_loss(fr.output, d.targets).gradient), st, h);
  }
  const auto rep = frp::freq_gradient_ratio_report(net, d, 9, 3);
  REQUIRE(rep.layers.size() == 3);
  CHECK(std::isfinite(rep.loss_k1));
  CHECK(std::isfinite(rep.loss_k2));
  CHECK_FALSE(rep.blocks.empty());
  for (const auto& l : rep.layers) {
    CHECK(l.lambda_ratios.size() + l.lambda_undefined == 128 * 2048);
    CHECK(l.w_row_max.size() == 128);
    for (double r : l.lambda_ratios) {
      if (!(std::isfinite(r) && r >= 0.0)) {
        FAIL("bad ratio");
        break;
      }
    }
    CHECK(std::isfinite(l.lambda_median));
  }
}
