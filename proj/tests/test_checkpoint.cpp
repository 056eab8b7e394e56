#include <filesystem>
#include <string>

#include "doctest.h"
#include "frp/checkpoint.hpp"
#include "frp/errors.hpp"
#include "oracles.hpp"

using frp::Matrix;

namespace {

frp::NetworkSpec spec_for(frp::ReparamMode mode) {
  frp::NetworkSpec s;
  s.input_dim = 2;
  s.hidden_widths = {6, 6, 5};
  s.output_dim = 3;
  s.activation = frp::Activation::sin(7.25);
  s.encoding = frp::PositionalEncodingSpec{2, true};
  s.reparam.mode = mode;
  s.reparam.frequencies = 2;
  s.reparam.phases = 2;
  s.reparam.interval_scale = 0.3;
  return s;
}

void check_identical(const frp::Network& a, const frp::Network& b) {
  CHECK(a.spec() == b.spec());
  REQUIRE(a.layers().size() == b.layers().size());
  for (std::size_t n = 0; n < a.layers().size(); ++n) {
    const auto& la = a.layers()[n];
    const auto& lb = b.layers()[n];
    CHECK(la.weight == lb.weight);
    CHECK(la.bias == lb.bias);
    REQUIRE(la.reparam.has_value() == lb.reparam.has_value());
    if (la.reparam) {
      CHECK(la.reparam->mode == lb.reparam->mode);
      CHECK(la.reparam->coefficients == lb.reparam->coefficients);
      CHECK(la.reparam->basis->values() == lb.reparam->basis->values());
      CHECK(la.reparam->trainable_basis == lb.reparam->trainable_basis);
    }
  }
}

std::string parse_error(const std::string& text) {
  try {
    frp::parse_checkpoint(text);
  } catch (const frp::FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("round trip is bit exact for every mode") {
  for (auto mode : {frp::ReparamMode::None, frp::ReparamMode::FR, frp::ReparamMode::RR, frp::ReparamMode::RIR}) {
    CAPTURE(frp::to_string(mode));
    auto net = frp::Network::initialize(spec_for(mode), 17);
    if (mode == frp::ReparamMode::RIR) {
      // move the trainable basis away from its initial values
      for (auto& l : net.mutable_layers()) {
        if (l.reparam) l.reparam->trainable_basis(0, 0) += 0.1234567890123;
      }
      net.sync_derived_weights();
    }
    const std::string text = frp::serialize_checkpoint(net);
    const auto back = frp::parse_checkpoint(text);
    check_identical(net, back);
    frp::Rng rng(1);
    const Matrix x = oracle::random_matrix(10, 2, rng);
    CHECK(frp::predict(net, x) == frp::predict(back, x));
    CHECK(frp::serialize_checkpoint(back) == text);
  }
}

TEST_CASE("file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "frp_test_checkpoint";
  std::filesystem::create_directories(dir);
  const auto net = frp::Network::initialize(spec_for(frp::ReparamMode::FR), 3);
  frp::save_checkpoint(net, dir / "n.frp");
  check_identical(net, frp::load_checkpoint(dir / "n.frp"));
  CHECK_THROWS_AS(frp::load_checkpoint(dir / "absent.frp"), frp::IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed checkpoints are rejected with line numbers") {
  const auto net = frp::Network::initialize(spec_for(frp::ReparamMode::FR), 3);
  const std::string text = frp::serialize_checkpoint(net);
  CHECK(text.rfind("frp-checkpoint 1\n", 0) == 0);

  CHECK_FALSE(parse_error("").empty());
  CHECK(parse_error("frp-checkpoint 2\n").find("line 1") != std::string::npos);

  std::string bad = text;
  bad.replace(bad.find("hidden_widths"), 13, "hidden_widthz");
  CHECK(parse_error(bad).find("line 3") != std::string::npos);

  CHECK_FALSE(parse_error(text.substr(0, text.size() / 2)).empty());
  CHECK_FALSE(parse_error(text.substr(0, text.rfind("end"))).empty());
  CHECK_FALSE(parse_error(text + "extra\n").empty());

  std::string nan = text;
  const auto bias = nan.rfind("bias ");
  const auto value = nan.find(' ', bias + 5);
  nan.insert(value + 1, "x");
  CHECK_FALSE(parse_error(nan).empty());
}
