#include <doctest.h>

#include <cstdlib>

#include "itrl/config.hpp"

using namespace itrl::config;

TEST_CASE("defaults match the documented values") {
  AppConfig cfg;
  CHECK(cfg.eta == 6000);
  CHECK(cfg.gamma == 1000);
  CHECK(cfg.phi == 5);
  CHECK(cfg.group_size == 8);
  CHECK(cfg.eps_low == 0.20);
  CHECK(cfg.eps_high == 0.26);
  CHECK(cfg.icepop_alpha == 0.5);
  CHECK(cfg.icepop_beta == 5.0);
  CHECK(cfg.history_budget == 1000);
  CHECK(cfg.use_efficiency_reward);
  CHECK(cfg.verifier_timeout_s == 10.0);
}

TEST_CASE("serialize then parse is the identity") {
  AppConfig cfg;
  cfg.phi = 7;
  cfg.eps_low = 0.1234567890123;
  cfg.endpoint = "http://example.test:9999";
  cfg.use_efficiency_reward = false;
  const AppConfig back = parse_config(serialize_config(cfg));
  CHECK(back == cfg);
}

TEST_CASE("parser handles comments and blank lines") {
  const AppConfig cfg = parse_config(
      "# a comment\n"
      "\n"
      "phi=4\n"
      "policy=stochastic\n");
  CHECK(cfg.phi == 4);
  CHECK(cfg.policy == "stochastic");
}

TEST_CASE("unknown keys and malformed values are rejected") {
  CHECK_THROWS_AS((void)parse_config("does_not_exist=1\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("phi=banana\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("no equals sign\n"), ConfigError);
}

TEST_CASE("out-of-domain values fail validation") {
  CHECK_THROWS_AS((void)parse_config("phi=0\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("group_size=0\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("eps_low=-0.5\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("advantage_scope=bogus\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("policy=bogus\n"), ConfigError);
}

TEST_CASE("environment variables override file values") {
  setenv("ITRL_PHI", "9", 1);
  const AppConfig cfg = parse_config("phi=4\n");
  CHECK(cfg.phi == 9);
  unsetenv("ITRL_PHI");
  const AppConfig plain = parse_config("phi=4\n");
  CHECK(plain.phi == 4);
}

TEST_CASE("load_config names the missing path") {
  try {
    (void)load_config("/no/such/config/file.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/no/such/config/file.cfg") !=
          std::string::npos);
  }
}

TEST_CASE("converters hand the right knobs to the engines") {
  AppConfig cfg;
  cfg.phi = 3;
  cfg.group_size = 4;
  cfg.seed = 99;
  cfg.advantage_scope = "output_level";
  const auto r = cfg.rollout_config();
  CHECK(r.phi == 3);
  CHECK(r.group_size == 4);
  CHECK(r.seed == 99);
  const auto o = cfg.objective_config();
  CHECK(o.advantage_scope == itrl::objective::AdvantageScope::kOutputLevel);
  CHECK(o.eps_low == cfg.eps_low);
  CHECK(o.icepop_beta == cfg.icepop_beta);
}
