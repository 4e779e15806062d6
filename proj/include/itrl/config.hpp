#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "itrl/objective.hpp"
#include "itrl/rollout.hpp"

namespace itrl::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Application configuration: flat key=value file, every field validated on
/// load, environment variables (ITRL_<KEY>) overriding file values.
struct AppConfig {
  std::size_t eta = 6000;
  std::size_t gamma = 1000;
  int phi = 5;
  int group_size = 8;
  int gen_budget = 10240;
  double temperature = 1.0;
  double top_p = 1.0;
  int history_budget = 1000;
  double eps_low = 0.20;
  double eps_high = 0.26;
  double icepop_alpha = 0.5;
  double icepop_beta = 5.0;
  double sigma_guard = 1e-8;
  std::string advantage_scope = "trajectory_level";  // or "output_level"
  bool literal_denominator = false;
  bool use_efficiency_reward = true;
  double verifier_timeout_s = 10.0;
  std::string policy = "scripted";  // scripted | stochastic | wire
  std::string endpoint = "http://127.0.0.1:8080";
  std::string model = "default";
  std::uint64_t seed = 0;
  double stochastic_p_correct = 0.5;
  double stochastic_p_summary = 0.5;
  double stochastic_p_malformed = 0.0;
  double logprob_divergence = 0.2;
  int concurrency = 8;
  int max_in_flight = 16;

  rollout::RolloutConfig rollout_config() const;
  objective::ObjectiveConfig objective_config() const;
};

/// Parses "key=value" lines ('#' comments and blank lines ignored), then
/// applies ITRL_<KEY> environment overrides. Throws ConfigError on unknown
/// keys or invalid values.
AppConfig load_config(const std::string& path);
AppConfig parse_config(const std::string& text);

/// Round-trippable key=value rendering: parse(serialize(cfg)) == cfg.
std::string serialize_config(const AppConfig& cfg);

bool operator==(const AppConfig& a, const AppConfig& b);

}  // namespace itrl::config
