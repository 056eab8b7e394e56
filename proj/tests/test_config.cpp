#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "frp/config.hpp"
#include "frp/errors.hpp"

namespace {

std::string config_error(const std::string& text) {
  try {
    frp::parse_config_text(text);
  } catch (const frp::ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal config takes defaults") {
  const auto c = frp::parse_config_text("[task]\nkind = \"function1d\"\n");
  CHECK(c.task.kind == frp::TaskKind::Function1D);
  CHECK(c.task.samples == 300);
  CHECK(c.network.hidden == std::vector<std::size_t>{128, 128, 128, 128});
  CHECK(c.reparam.mode == frp::ReparamMode::None);
  CHECK(c.training.iterations == 10000);
  CHECK(c.training.schedule == frp::LrSchedule(frp::ConstantLr{1e-6}));
  const auto spec = c.network_spec();
  CHECK(spec.input_dim == 1);
  CHECK(spec.output_dim == 1);
  CHECK_FALSE(spec.encoding.has_value());
}

TEST_CASE("omega0 default depends on the task") {
  auto c = frp::parse_config_text("[task]\nkind = \"function1d\"\n[network]\nactivation = \"sin\"\n");
  CHECK(c.network_spec().activation.omega0 == 5.0);
  c = frp::parse_config_text("[task]\nkind = \"image2d\"\nimage = \"x.pgm\"\n[network]\nactivation = \"sin\"\n");
  CHECK(c.network_spec().activation.omega0 == 30.0);
  CHECK(c.network_spec().input_dim == 2);
  c = frp::parse_config_text(
      "[task]\nkind = \"function1d\"\n[network]\nactivation = \"sin\"\nomega0 = 12.5\n");
  CHECK(c.network_spec().activation.omega0 == 12.5);
}

TEST_CASE("full config parses") {
  const std::string text = R"(# comment
[task]
kind = "function1d"
samples = 128

[network]
hidden = [64, 64, 64]
activation = "tanh"
encoding_levels = 4
encoding_include_input = true

[reparam]
mode = "rir"
F = 8
P = 4
interval_scale = 0.5
layers = [2]

[training]
iterations = 500
schedule = "step_drop"
lr0 = 1e-4
drop_at = 100
lr1 = 1e-5
seed = 9

[diagnostics]
log_every = 5
ntk_every = 0

[output]
directory = "out/x"  # trailing comment
checkpoint = false
)";
  const auto c = frp::parse_config_text(text);
  CHECK(c.task.samples == 128);
  CHECK(c.network.hidden == std::vector<std::size_t>{64, 64, 64});
  CHECK(c.network.activation == frp::ActivationType::Tanh);
  CHECK(c.reparam.mode == frp::ReparamMode::RIR);
  CHECK(c.reparam.frequencies == 8);
  CHECK(c.reparam.phases == 4);
  CHECK(c.reparam.interval_scale == 0.5);
  CHECK(c.reparam.layers == std::vector<std::size_t>{2});
  CHECK(c.training.schedule == frp::LrSchedule(frp::StepDropLr{1e-4, 100, 1e-5}));
  CHECK(c.training.seed == 9);
  CHECK(c.diagnostics.log_every == 5);
  CHECK(c.output.directory == "out/x");
  CHECK_FALSE(c.output.checkpoint);
  const auto spec = c.network_spec();
  REQUIRE(spec.encoding.has_value());
  CHECK(spec.encoded_input_dim() == 9);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("serialization round trips") {
  frp::ExperimentConfig c;
  c.task.kind = frp::TaskKind::Image2D;
  c.task.image = "/tmp/some image.pgm";
  c.network.hidden = {256, 256};
  c.network.activation = frp::ActivationType::Gauss;
  c.network.spread = 0.05;
  c.network.omega0 = 0.1 + 0.2;
  c.reparam.mode = frp::ReparamMode::FR;
  c.reparam.interval_scale = 1.0 / 3.0;
  c.training.schedule = frp::ExpDecayLr{5e-3, 5e-4, 777};
  c.diagnostics.ntk_every = 50;
  c.output.wall_time_in_loss_log = true;
  const std::string text = frp::serialize_config(c);
  CHECK(frp::parse_config_text(text) == c);
  CHECK(frp::serialize_config(frp::parse_config_text(text)) == text);
}

TEST_CASE("errors carry line numbers") {
  CHECK(config_error("[task]\nkind = \"function1d\"\n[reparam]\nreparm.F = 3\n").find("line 4") !=
        std::string::npos);
  CHECK(config_error("[task]\nkind = \"function1d\"\n[reparam]\nFF = 3\n").find("unknown key") !=
        std::string::npos);
  CHECK(config_error("[task]\nkind = \"function1d\"\nsamples = -3\n").find("line 3") != std::string::npos);
  CHECK(config_error("[task]\nkind = \"function1d\"\n[bogus]\n").find("line 3") != std::string::npos);
  CHECK(config_error("[task]\nkind = \"function1d\"\nkind = \"function1d\"\n").find("line 3") !=
        std::string::npos);
  CHECK_FALSE(config_error("[network]\nhidden = [1, 2\n").empty());
  CHECK_FALSE(config_error("[network]\nhidden = [128]\n").empty());  // task.kind missing
  CHECK_FALSE(config_error("[task]\nkind = \"cube\"\n").empty());
  CHECK_FALSE(config_error("[task]\nkind = \"function1d\"\n[training]\nlr0 = 1e-3\n").empty());
  CHECK_FALSE(config_error("[task]\nkind = \"function1d\"\n[network]\nactivation = \"elu\"\n").empty());
}

TEST_CASE("validation") {
  auto c = frp::parse_config_text("[task]\nkind = \"image2d\"\nimage = \"/nonexistent/x.pgm\"\n");
  CHECK_THROWS_AS(c.validate(), frp::Error);
  c = frp::parse_config_text(
      "[task]\nkind = \"function1d\"\n[training]\nschedule = \"step_drop\"\nlr0 = 1e-4\n"
      "drop_at = 20000\nlr1 = 1e-5\n");
  CHECK_THROWS_AS(c.validate(), frp::Error);
  c = frp::parse_config_text("[task]\nkind = \"function1d\"\n[reparam]\nmode = \"fr\"\nF = 1\nP = 1\n");
  CHECK_THROWS_AS(c.validate(), frp::Error);
}

TEST_CASE("image paths resolve against the config directory") {
  const auto dir = std::filesystem::temp_directory_path() / "frp_test_config";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "c.toml") << "[task]\nkind = \"image2d\"\nimage = \"img.pgm\"\n";
  }
  const auto c = frp::parse_config(dir / "c.toml");
  CHECK(std::filesystem::path(c.task.image) == dir / "img.pgm");
  CHECK_THROWS_AS(frp::parse_config(dir / "missing.toml"), frp::IoError);
  std::filesystem::remove_all(dir);
}
