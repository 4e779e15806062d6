#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "itrl/log.hpp"
#include "itrl/objective.hpp"
#include "itrl/policy.hpp"
#include "itrl/reward.hpp"
#include "itrl/rollout.hpp"
#include "itrl/tokenizer.hpp"

namespace itrl::pipeline {

/// Stream id for the log-prob provider: one stream per (trajectory, round).
inline std::uint64_t logprob_stream(int traj_index, int j) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(traj_index))
          << 16) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
}

/// Verifies every completed trajectory's final output and fills
/// group.rewards. The verification target is always the last round's raw
/// output, whatever the termination reason.
std::vector<log::RewardDetail> score_group(reward::RolloutGroup& group,
                                           reward::Verifier& verifier,
                                           const std::string& ground_truth,
                                           int phi, bool use_efficiency,
                                           double timeout_s);

/// Group-relative advantages under the configured scope. Returns one value
/// per round of each trajectory (trajectory scope broadcasts the trajectory
/// advantage to its rounds).
std::vector<std::vector<double>> round_advantages(
    const std::vector<double>& rewards, const std::vector<int>& round_counts,
    const objective::ObjectiveConfig& cfg);

/// The per-round token sequence the kernel sees: injected (truncated) summary
/// tokens followed by the raw output tokens.
TokenSeq round_token_seq(const std::string& injected_summary,
                         const std::string& raw_output, const Tokenizer& tok);

/// Reconstructs each round's injected summary from the previous round's
/// output, mirroring what the rollout engine fed the policy.
std::vector<std::string> injected_summaries(const log::LoggedTrajectory& traj,
                                            int history_budget,
                                            const Tokenizer& tok);

/// Assembles the flattened TokenBatch for one query's trajectories, in
/// ascending (traj, round, pos) order.
objective::TokenBatch build_token_batch(
    const std::vector<log::LoggedTrajectory>& trajectories,
    const std::vector<std::vector<double>>& advantages,
    policy::LogProbProvider& provider, const Tokenizer& tok,
    int history_budget);

/// Log-prob sidecar file: one JSONL line per (query, trajectory, round) with
/// aligned logp_new / logp_old / logp_infer arrays.
void write_logprobs(std::ostream& out,
                    const std::vector<log::LoggedTrajectory>& trajectories,
                    policy::LogProbProvider& provider, const Tokenizer& tok,
                    int history_budget);

struct LogProbKey {
  std::string query_id;
  int traj_index = 0;
  int j = 0;
  auto operator<=>(const LogProbKey&) const = default;
};

std::map<LogProbKey, policy::FileLogProbProvider::Entry> read_logprobs(
    std::istream& in);

}  // namespace itrl::pipeline
