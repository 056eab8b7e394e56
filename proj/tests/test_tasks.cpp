#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "frp/errors.hpp"
#include "frp/tasks.hpp"
#include "oracles.hpp"

using frp::Matrix;

namespace {

std::vector<unsigned char> bytes(const std::string& s) { return {s.begin(), s.end()}; }

std::string format_error(const std::string& s) {
  try {
    frp::decode_pnm(bytes(s));
  } catch (const frp::FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("1d target values") {
  // (sin .3pi + sin .5pi + sin .7pi + sin .9pi) / 2 = 1.46..., rounds to 1
  CHECK(frp::target_1d(0.1) == 2.0);
  CHECK(frp::target_1d(0.0) == 0.0);
  CHECK(frp::target_1d(1.0) == 0.0);
  frp::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-1, 1);
    const double y = frp::target_1d(x);
    CHECK(frp::target_1d(-x) == -y);
    CHECK(std::abs(y) <= 4.0);
    CHECK(y == std::round(y / 2) * 2);
  }
}

TEST_CASE("1d dataset grid") {
  const auto d = frp::make_dataset_1d(300);
  REQUIRE(d.size() == 300);
  CHECK(d.inputs(0, 0) == -1.0);
  CHECK(d.inputs(299, 0) == 1.0);
  for (std::size_t i = 0; i < 300; ++i) {
    CHECK(d.inputs(i, 0) == doctest::Approx(-1.0 + 2.0 * i / 299).epsilon(1e-15));
    CHECK(d.targets(i, 0) == frp::target_1d(d.inputs(i, 0)));
    CHECK(d.inputs(i, 0) == -d.inputs(299 - i, 0));
  }
  CHECK(d.domain == frp::DomainTag::Function1D);
  CHECK_THROWS_AS(frp::make_dataset_1d(1), frp::ValidationError);
}

TEST_CASE("decode tiny rasters") {
  const auto g = frp::decode_pnm(bytes(std::string("P5\n1 1\n255\n") + char(255)));
  CHECK(g.width == 1);
  CHECK(g.height == 1);
  CHECK(g.channels == 1);
  CHECK(g.pixels == std::vector<double>{1.0});

  const std::string body = {char(0), char(51), char(102), char(255)};
  const auto g2 = frp::decode_pnm(bytes("P5\n# comment\n2 2\n255\n" + body));
  CHECK(g2.pixels == std::vector<double>{0.0, 0.2, 0.4, 1.0});

  const std::string rgb = {char(255), char(0), char(0), char(0), char(0), char(255)};
  const auto c = frp::decode_pnm(bytes("P6 2 1 255 " + rgb));
  CHECK(c.channels == 3);
  CHECK(c.pixels == std::vector<double>{1, 0, 0, 0, 0, 1});
}

TEST_CASE("encode round-trips bytes") {
  frp::Rng rng(7);
  for (std::size_t ch : {1u, 3u}) {
    std::string raw = ch == 1 ? "P5\n5 3\n255\n" : "P6\n5 3\n255\n";
    for (std::size_t i = 0; i < 15 * ch; ++i) raw += char(rng.next() & 0xff);
    const auto in = bytes(raw);
    CHECK(frp::encode_pnm(frp::decode_pnm(in)) == in);
  }
}

TEST_CASE("format errors report offsets") {
  CHECK(format_error("P3\n1 1\n255\n0").find("byte offset 0") != std::string::npos);
  CHECK(format_error("P5\n1 1\n65535\n00").find("maxval") != std::string::npos);
  const std::string trunc = format_error("P5\n2 2\n255\nab");
  CHECK(trunc.find("byte offset 13") != std::string::npos);
  CHECK_FALSE(format_error("P5\n0 1\n255\n").empty());
  CHECK_FALSE(format_error("").empty());
  CHECK_FALSE(format_error("P5\nx 1\n255\n").empty());
}

TEST_CASE("image file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "frp_test_tasks";
  std::filesystem::create_directories(dir);
  frp::Image img{3, 2, 1, {0, 1, 0.2, 0.4, 0.6, 0.8}};
  frp::save_image(img, dir / "a.pgm");
  const auto back = frp::load_image(dir / "a.pgm");
  CHECK(back.pixels == img.pixels);
  CHECK_THROWS_AS(frp::load_image(dir / "missing.pgm"), frp::IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("2d dataset coordinates") {
  frp::Image img{2, 2, 1, {0, 0.2, 0.4, 1.0}};
  const auto d = frp::make_dataset_2d(img);
  REQUIRE(d.size() == 4);
  CHECK(d.inputs.row(0)[0] == -0.5);
  CHECK(d.inputs.row(0)[1] == -0.5);
  CHECK(d.inputs.row(1)[0] == 0.5);
  CHECK(d.inputs.row(2)[1] == 0.5);
  CHECK(d.targets(3, 0) == 1.0);
  CHECK(d.width == 2);
  CHECK(d.height == 2);
  CHECK(d.domain == frp::DomainTag::Image2D);
}

TEST_CASE("image_from_values clamps") {
  const auto img = frp::image_from_values(Matrix::from_rows({{-0.5}, {0.25}, {2.0}}), 3, 1);
  CHECK(img.pixels == std::vector<double>{0.0, 0.25, 1.0});
  CHECK_THROWS_AS(frp::image_from_values(Matrix(4, 1), 3, 1), frp::ShapeError);
}

TEST_CASE("mse gradient matches central differences") {
  frp::Rng rng(11);
  Matrix p = oracle::random_matrix(7, 3, rng);
  const Matrix t = oracle::random_matrix(7, 3, rng);
  const auto lr = frp::mse_loss(p, t);
  CHECK(lr.loss == frp::mse(p, t));
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double orig = p(i, j);
      p(i, j) = orig + 1e-6;
      const double up = frp::mse(p, t);
      p(i, j) = orig - 1e-6;
      const double dn = frp::mse(p, t);
      p(i, j) = orig;
      CHECK(oracle::rel_err(lr.gradient(i, j), (up - dn) / 2e-6) <= 1e-6);
    }
  }
  CHECK_THROWS_AS(frp::mse(Matrix(2, 1), Matrix(1, 2)), frp::ShapeError);
}

TEST_CASE("psnr") {
  const Matrix t(4, 1, 0.5);
  CHECK(frp::psnr(Matrix(4, 1, 0.6), t) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(std::isinf(frp::psnr(t, t)));
  CHECK(frp::psnr(Matrix(4, 1, 1.7), Matrix(4, 1, 1.0)) > 1e300);
}
