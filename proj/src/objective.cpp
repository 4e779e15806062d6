#include "itrl/objective.hpp"

#include <algorithm>
#include <cmath>

namespace itrl::objective {

void TokenBatch::validate() const {
  const std::size_t n = logp_new.size();
  if (logp_old.size() != n || logp_infer.size() != n ||
      loss_mask.size() != n || advantage.size() != n || keys.size() != n)
    throw std::invalid_argument("TokenBatch: array lengths differ");
}

std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const ObjectiveConfig& cfg) {
  if (rewards.empty())
    throw std::invalid_argument("group_advantages: empty reward list");
  // An all-equal group has sigma == 0 by definition; return exact zeros
  // rather than letting floating-point mean error leak through the guard.
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards.front(); }))
    return std::vector<double>(rewards.size(), 0.0);
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  const double sigma = std::sqrt(var) + cfg.sigma_guard;
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (double r : rewards) adv.push_back((r - mean) / sigma);
  return adv;
}

double icepop_mask(double k, double alpha, double beta) {
  return (k >= alpha && k <= beta) ? k : 0.0;
}

double clipped_token_term(double ratio, double adv, double eps_low,
                          double eps_high) {
  const double clipped = std::clamp(ratio, 1.0 - eps_low, 1.0 + eps_high);
  return std::min(ratio * adv, clipped * adv);
}

namespace {

std::int64_t effective_denom(const TokenBatch& batch,
                             const ObjectiveConfig& cfg) {
  if (cfg.literal_denominator)
    return static_cast<std::int64_t>(batch.size());
  std::int64_t denom = 0;
  for (std::uint8_t m : batch.loss_mask) denom += (m != 0);
  return denom;
}

}  // namespace

ObjectiveResult objective_value(const TokenBatch& batch,
                                const ObjectiveConfig& cfg) {
  batch.validate();
  ObjectiveResult result;
  result.denom = effective_denom(batch, cfg);
  if (result.denom == 0)
    throw EmptyEffectiveBatch("objective_value: no unmasked tokens");
  result.per_token_terms.resize(batch.size(), 0.0);
  double sum = 0.0;
  for (std::size_t t = 0; t < batch.size(); ++t) {
    if (batch.loss_mask[t] == 0) continue;
    const double k = std::exp(batch.logp_old[t] - batch.logp_infer[t]);
    const double ice = icepop_mask(k, cfg.icepop_alpha, cfg.icepop_beta);
    if (ice == 0.0) continue;
    const double ratio = std::exp(batch.logp_new[t] - batch.logp_old[t]);
    const double term = ice * clipped_token_term(ratio, batch.advantage[t],
                                                 cfg.eps_low, cfg.eps_high);
    result.per_token_terms[t] = term;
    sum += term;  // fixed (traj, round, pos) order
  }
  result.value = sum / static_cast<double>(result.denom);
  return result;
}

std::vector<double> grad_logp_new(const TokenBatch& batch,
                                  const ObjectiveConfig& cfg) {
  batch.validate();
  const std::int64_t denom = effective_denom(batch, cfg);
  if (denom == 0)
    throw EmptyEffectiveBatch("grad_logp_new: no unmasked tokens");
  std::vector<double> grad(batch.size(), 0.0);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    if (batch.loss_mask[t] == 0) continue;
    const double k = std::exp(batch.logp_old[t] - batch.logp_infer[t]);
    const double ice = icepop_mask(k, cfg.icepop_alpha, cfg.icepop_beta);
    if (ice == 0.0) continue;
    const double adv = batch.advantage[t];
    const double ratio = std::exp(batch.logp_new[t] - batch.logp_old[t]);
    const double clipped = std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
    // min picks the unclipped branch on ties; only that branch depends on
    // logp_new, with d(r * adv)/dlogp_new = r * adv.
    if (ratio * adv <= clipped * adv)
      grad[t] = ice * adv * ratio / static_cast<double>(denom);
  }
  return grad;
}

}  // namespace itrl::objective
