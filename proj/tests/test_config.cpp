#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ioncount/config.hpp"

using namespace ioncount::config;

TEST_CASE("ini parsing basics") {
  const auto s = parse_ini(
      "# comment\n"
      "[beam]\n"
      "lambda0 = 0.2  ; trailing comment\n"
      "\n"
      "[plan]\n"
      "preset=25\n");
  REQUIRE(s.count("beam") == 1);
  CHECK(s.at("beam").at("lambda0") == "0.2");
  CHECK(s.at("plan").at("preset") == "25");
}

TEST_CASE("ini parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_ini("[beam\nlambda0=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("lambda0 = 1\n"), ConfigError);  // key before section
  CHECK_THROWS_AS(parse_ini("[beam]\nnot a pair\n"), ConfigError);
  CHECK_THROWS_AS(parse_ini("[beam]\nlambda0 =\n"), ConfigError);
}

TEST_CASE("defaults survive an empty config") {
  const auto cfg = config_from_text("");
  CHECK(cfg.beam.lambda0 == doctest::Approx(0.112));
  CHECK(cfg.plan.preset == 30);
  CHECK(cfg.plan.total_sites() == 320);
  CHECK(cfg.thresholds.in_situ == doctest::Approx(0.78));
  CHECK(cfg.master_seed == 1);
}

TEST_CASE("unknown sections and keys are rejected") {
  CHECK_THROWS_AS(config_from_text("[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[beam]\nlambda_zero = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[plan]\npreset = 30\nrows = 4\nextra = 2\n"),
                  ConfigError);
}

TEST_CASE("type errors are rejected") {
  CHECK_THROWS_AS(config_from_text("[beam]\nlambda0 = fast\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[plan]\npreset = 1.5\n"), ConfigError);
}

TEST_CASE("semantic validation") {
  CHECK_THROWS_AS(config_from_text("[beam]\nlambda0 = -1\n"), ConfigError);
  CHECK_THROWS_AS(config_from_text("[detector]\ncce = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(
      config_from_text("[thresholds]\npost_low = 2.0\npost_high = 1.0\n"),
      ConfigError);
  CHECK_THROWS_AS(config_from_text("[hbt]\nsecond_emitter_prob = 2\n"),
                  ConfigError);
}

TEST_CASE("activation pitch follows the implant plan unless overridden") {
  const auto follows = config_from_text("[plan]\npitch_um = 3.0\n");
  CHECK(follows.activation.pitch_um == doctest::Approx(3.0));
  const auto fixed = config_from_text(
      "[plan]\npitch_um = 3.0\n[activation]\npitch_um = 5.0\n");
  CHECK(fixed.activation.pitch_um == doctest::Approx(5.0));
}

TEST_CASE("seed and overrides") {
  const auto cfg = config_from_text(
      "[run]\nmaster_seed = 99\n[hbt]\nduration_ns = 1e6\nbin_ns = 0.25\n");
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.hbt.duration_ns == doctest::Approx(1e6));
  CHECK(cfg.hbt.bin_ns == doctest::Approx(0.25));
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_config("/nonexistent/path.ini"), ConfigError);
}
