#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace itrl::objective {

struct EmptyEffectiveBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AdvantageScope { kTrajectoryLevel, kOutputLevel };

struct ObjectiveConfig {
  double eps_low = 0.20;
  double eps_high = 0.26;
  double icepop_alpha = 0.5;
  double icepop_beta = 5.0;
  double sigma_guard = 1e-8;
  AdvantageScope advantage_scope = AdvantageScope::kTrajectoryLevel;
  /// When set, the denominator counts every token of every round (including
  /// masked history tokens) instead of only mask==1 tokens.
  bool literal_denominator = false;
};

/// Index key of one token: (trajectory, round, position within round).
struct TokenKey {
  std::int32_t traj = 0;
  std::int32_t round = 0;
  std::int32_t pos = 0;
};

/// Flattened per-token arrays consumed by the kernel. Tokens must already be
/// in ascending (traj, round, pos) order; the reduction relies on it for
/// bit-stable results.
struct TokenBatch {
  std::vector<double> logp_new;    // current policy
  std::vector<double> logp_old;    // rollout-time training engine
  std::vector<double> logp_infer;  // rollout-time inference engine
  std::vector<std::uint8_t> loss_mask;
  std::vector<double> advantage;
  std::vector<TokenKey> keys;

  std::size_t size() const { return logp_new.size(); }
  /// Throws std::invalid_argument unless all arrays have equal length.
  void validate() const;
};

/// Group-relative normalization: (R - mean) / (population std + guard).
/// The caller selects the scope by what it passes: one reward per trajectory
/// or one per round (pre-broadcast).
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const ObjectiveConfig& cfg);

/// Calibration mask: k inside the closed interval [alpha, beta], else 0.
double icepop_mask(double k, double alpha, double beta);

/// min(r * adv, clip(r, 1 - eps_low, 1 + eps_high) * adv).
double clipped_token_term(double ratio, double adv, double eps_low,
                          double eps_high);

struct ObjectiveResult {
  double value = 0.0;
  std::vector<double> per_token_terms;
  std::int64_t denom = 0;
};

/// Token-level-averaged clipped surrogate with history masking and IcePop
/// calibration. Summation runs in key order; throws EmptyEffectiveBatch when
/// no token contributes to the denominator.
ObjectiveResult objective_value(const TokenBatch& batch,
                                const ObjectiveConfig& cfg);

/// Analytic dJ/dlogp_new per token. At clip kinks the unclipped branch is
/// taken (deterministic sub-gradient choice).
std::vector<double> grad_logp_new(const TokenBatch& batch,
                                  const ObjectiveConfig& cfg);

}  // namespace itrl::objective
