#include <cmath>

#include "doctest.h"
#include "frp/errors.hpp"
#include "frp/optim.hpp"
#include "oracles.hpp"

namespace {

struct Scalar {
  std::vector<double> p;
  std::vector<frp::ParamBlock> blocks() { return {{"theta", p}}; }
};

void step(Scalar& s, std::vector<double> g, frp::AdamState& st, const frp::AdamHyper& h) {
  const std::vector<std::span<const double>> gs = {g};
  frp::adam_step(s.blocks(), gs, st, h);
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  Scalar s{{0.5, -2.0}};
  frp::AdamState st;
  frp::AdamHyper h;
  for (int i = 0; i < 3; ++i) step(s, {0.0, 0.0}, st, h);
  CHECK(s.p == std::vector<double>{0.5, -2.0});
  CHECK(st.step == 3);
}

TEST_CASE("first step moves by about lr") {
  Scalar s{{0.0}};
  frp::AdamState st;
  frp::AdamHyper h;
  h.lr = 0.1;
  step(s, {1.0}, st, h);
  CHECK(s.p[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("three steps match a scalar recurrence") {
  frp::AdamHyper h;
  h.lr = 0.01;
  const double g[] = {0.3, -1.2, 0.05};
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 3; ++t) {
    m = h.beta1 * m + (1 - h.beta1) * g[t - 1];
    v = h.beta2 * v + (1 - h.beta2) * g[t - 1] * g[t - 1];
    const double mh = m / (1 - std::pow(h.beta1, t));
    const double vh = v / (1 - std::pow(h.beta2, t));
    theta -= h.lr * mh / (std::sqrt(vh) + h.epsilon);
  }
  Scalar s{{1.0}};
  frp::AdamState st;
  for (double gi : g) step(s, {gi}, st, h);
  CHECK(std::abs(s.p[0] - theta) <= 1e-12);
}

TEST_CASE("update size is bounded by a multiple of lr") {
  frp::Rng rng(3);
  Scalar s{std::vector<double>(50, 0.0)};
  frp::AdamState st;
  frp::AdamHyper h;
  h.lr = 1e-3;
  for (int t = 0; t < 100; ++t) {
    const auto before = s.p;
    std::vector<double> g(50);
    for (auto& x : g) x = rng.uniform(-10, 10) * std::pow(10.0, rng.uniform(-6, 3));
    step(s, g, st, h);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(s.p[i] - before[i]) <= 10 * h.lr);
  }
}

TEST_CASE("non-finite gradient names the block and changes nothing") {
  std::vector<double> a = {1.0, 2.0}, b = {3.0};
  std::vector<frp::ParamBlock> blocks = {{"layer0.weight", a}, {"layer0.bias", b}};
  frp::AdamState st;
  frp::AdamHyper h;
  const std::vector<double> ga = {0.1, 0.2};
  for (double bad : {std::nan(""), HUGE_VAL, -HUGE_VAL}) {
    const std::vector<double> gb = {bad};
    const std::vector<std::span<const double>> gs = {ga, gb};
    try {
      frp::adam_step(blocks, gs, st, h);
      FAIL("expected NumericError");
    } catch (const frp::NumericError& e) {
      CHECK(std::string(e.what()).find("layer0.bias") != std::string::npos);
    }
  }
  CHECK(a == std::vector<double>{1.0, 2.0});
  CHECK(b == std::vector<double>{3.0});
  CHECK(st.step == 0);
}

TEST_CASE("block count mismatch is a shape error") {
  Scalar s{{1.0}};
  frp::AdamState st;
  const std::vector<double> g = {1.0, 2.0};
  const std::vector<std::span<const double>> gs = {g};
  CHECK_THROWS_AS(frp::adam_step(s.blocks(), gs, st, frp::AdamHyper{}), frp::ShapeError);
}

TEST_CASE("hyperparameter validation") {
  frp::AdamHyper h;
  h.lr = 0;
  CHECK_THROWS_AS(h.validate(), frp::ValidationError);
  h = {};
  h.beta1 = 1.0;
  CHECK_THROWS_AS(h.validate(), frp::ValidationError);
  h = {};
  h.epsilon = -1;
  CHECK_THROWS_AS(h.validate(), frp::ValidationError);
}

TEST_CASE("learning rate schedules") {
  const frp::LrSchedule c = frp::ConstantLr{1e-6};
  CHECK(frp::lr_at(c, 0) == 1e-6);
  CHECK(frp::lr_at(c, 99999) == 1e-6);

  const frp::LrSchedule s = frp::StepDropLr{1e-4, 3000, 1e-5};
  CHECK(frp::lr_at(s, 2999) == 1e-4);
  CHECK(frp::lr_at(s, 3000) == 1e-5);
  CHECK(frp::lr_at(s, 3001) == 1e-5);

  const frp::LrSchedule e = frp::ExpDecayLr{5e-3, 5e-4, 1000};
  CHECK(frp::lr_at(e, 0) == doctest::Approx(5e-3).epsilon(1e-12));
  CHECK(frp::lr_at(e, 500) == doctest::Approx(5e-3 * std::sqrt(0.1)).epsilon(1e-12));
  CHECK(frp::lr_at(e, 1000) == doctest::Approx(5e-4).epsilon(1e-12));
  CHECK(frp::lr_at(e, 5000) == doctest::Approx(5e-4).epsilon(1e-12));

  CHECK_NOTHROW(frp::validate_schedule(s, 10000));
  CHECK_THROWS_AS(frp::validate_schedule(s, 2000), frp::ValidationError);
  CHECK_THROWS_AS(frp::validate_schedule(frp::ConstantLr{0.0}, 10), frp::ValidationError);
  CHECK_THROWS_AS(frp::validate_schedule(frp::ExpDecayLr{1e-3, -1e-4, 10}, 10), frp::ValidationError);
}

TEST_CASE("network step reduces a quadratic loss") {
  frp::NetworkSpec spec;
  spec.hidden_widths = {16, 16};
  spec.reparam.mode = frp::ReparamMode::FR;
  spec.reparam.frequencies = 4;
  spec.reparam.phases = 2;
  auto net = frp::Network::initialize(spec, 0);
  const frp::Matrix x = [] { frp::Rng r(1); return oracle::random_matrix(32, 1, r); }();
  frp::Matrix y(32, 1);
  for (std::size_t i = 0; i < 32; ++i) y(i, 0) = std::sin(3 * x(i, 0));
  auto loss = [&] {
    const auto out = frp::predict(net, x);
    double s = 0;
    for (std::size_t i = 0; i < 32; ++i) s += (out(i, 0) - y(i, 0)) * (out(i, 0) - y(i, 0));
    return s / 32;
  };
  const double before = loss();
  frp::AdamState st;
  frp::AdamHyper h;
  for (int t = 0; t < 50; ++t) {
    const auto fr = frp::forward(net, x);
    frp::Matrix d(32, 1);
    for (std::size_t i = 0; i < 32; ++i) d(i, 0) = 2 * (fr.output(i, 0) - y(i, 0)) / 32;
    frp::adam_step(net, frp::backward(net, fr.trace, d), st, h);
  }
  CHECK(loss() < 0.5 * before);
  net.sync_derived_weights();
  const auto& l = net.layers()[1];
  CHECK(frp::max_abs_diff(l.weight, frp::compose_weights(*l.reparam)) == 0.0);
}
