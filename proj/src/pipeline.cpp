#include "itrl/pipeline.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace itrl::pipeline {

std::vector<log::RewardDetail> score_group(reward::RolloutGroup& group,
                                           reward::Verifier& verifier,
                                           const std::string& ground_truth,
                                           int phi, bool use_efficiency,
                                           double timeout_s) {
  std::vector<log::RewardDetail> details;
  details.reserve(group.trajectories.size());
  group.rewards.clear();
  for (const rollout::Trajectory& traj : group.trajectories) {
    log::RewardDetail d;
    const auto task =
        reward::task_reward(traj.final_output(), ground_truth, verifier,
                            timeout_s);
    d.task_reward = task.value;
    d.cause = task.cause;
    d.efficiency_reward =
        reward::efficiency_reward(traj.iteration_count(), phi);
    d.combined = reward::combine(d.task_reward, d.efficiency_reward,
                                 use_efficiency);
    group.rewards.push_back(d.combined);
    details.push_back(std::move(d));
  }
  return details;
}

std::vector<std::vector<double>> round_advantages(
    const std::vector<double>& rewards, const std::vector<int>& round_counts,
    const objective::ObjectiveConfig& cfg) {
  if (rewards.size() != round_counts.size())
    throw std::invalid_argument("round_advantages: size mismatch");
  std::vector<std::vector<double>> out(rewards.size());

  if (cfg.advantage_scope == objective::AdvantageScope::kTrajectoryLevel) {
    const std::vector<double> adv = objective::group_advantages(rewards, cfg);
    for (std::size_t i = 0; i < rewards.size(); ++i)
      out[i].assign(static_cast<std::size_t>(round_counts[i]), adv[i]);
    return out;
  }

  // Output-level scope: normalize over the pre-broadcast per-round rewards,
  // so longer trajectories weigh more in the mean/std.
  std::vector<double> flat;
  for (std::size_t i = 0; i < rewards.size(); ++i)
    flat.insert(flat.end(), static_cast<std::size_t>(round_counts[i]),
                rewards[i]);
  const std::vector<double> adv = objective::group_advantages(flat, cfg);
  std::size_t at = 0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i].assign(adv.begin() + static_cast<std::ptrdiff_t>(at),
                  adv.begin() + static_cast<std::ptrdiff_t>(at) +
                      round_counts[i]);
    at += static_cast<std::size_t>(round_counts[i]);
  }
  return out;
}

TokenSeq round_token_seq(const std::string& injected_summary,
                         const std::string& raw_output, const Tokenizer& tok) {
  TokenSeq seq = tok.encode(injected_summary);
  const TokenSeq output = tok.encode(raw_output);
  seq.insert(seq.end(), output.begin(), output.end());
  return seq;
}

std::vector<std::string> injected_summaries(const log::LoggedTrajectory& traj,
                                            int history_budget,
                                            const Tokenizer& tok) {
  std::vector<std::string> out(traj.records.size());
  for (std::size_t r = 1; r < traj.records.size(); ++r) {
    const auto& prev = traj.records[r - 1].parsed;
    if (!prev.summary) continue;  // defensive; rounds only follow summaries
    TokenSeq ids = tok.encode(*prev.summary);
    if (static_cast<int>(ids.size()) > history_budget)
      ids.resize(static_cast<std::size_t>(history_budget));
    out[r] = tok.decode(ids);
  }
  return out;
}

objective::TokenBatch build_token_batch(
    const std::vector<log::LoggedTrajectory>& trajectories,
    const std::vector<std::vector<double>>& advantages,
    policy::LogProbProvider& provider, const Tokenizer& tok,
    int history_budget) {
  if (trajectories.size() != advantages.size())
    throw std::invalid_argument("build_token_batch: advantage shape mismatch");

  objective::TokenBatch batch;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const log::LoggedTrajectory& traj = trajectories[i];
    const auto injected = injected_summaries(traj, history_budget, tok);
    for (std::size_t r = 0; r < traj.records.size(); ++r) {
      const auto& rec = traj.records[r];
      const TokenSeq seq = round_token_seq(injected[r], rec.raw_output, tok);
      if (seq.empty()) continue;
      const std::size_t hist_len = tok.count_tokens(injected[r]);
      const std::uint64_t stream = logprob_stream(traj.traj_index, rec.j);
      const auto lp_new =
          provider.logprobs(seq, policy::LogProbRole::kNew, stream);
      const auto lp_old =
          provider.logprobs(seq, policy::LogProbRole::kOld, stream);
      const auto lp_inf =
          provider.logprobs(seq, policy::LogProbRole::kInfer, stream);
      for (std::size_t t = 0; t < seq.size(); ++t) {
        batch.logp_new.push_back(lp_new[t]);
        batch.logp_old.push_back(lp_old[t]);
        batch.logp_infer.push_back(lp_inf[t]);
        batch.loss_mask.push_back(t < hist_len ? 0 : 1);
        batch.advantage.push_back(advantages[i][r]);
        batch.keys.push_back({static_cast<std::int32_t>(traj.traj_index),
                              static_cast<std::int32_t>(rec.j),
                              static_cast<std::int32_t>(t)});
      }
    }
  }
  return batch;
}

void write_logprobs(std::ostream& out,
                    const std::vector<log::LoggedTrajectory>& trajectories,
                    policy::LogProbProvider& provider, const Tokenizer& tok,
                    int history_budget) {
  for (const log::LoggedTrajectory& traj : trajectories) {
    const auto injected = injected_summaries(traj, history_budget, tok);
    for (std::size_t r = 0; r < traj.records.size(); ++r) {
      const auto& rec = traj.records[r];
      const TokenSeq seq = round_token_seq(injected[r], rec.raw_output, tok);
      if (seq.empty()) continue;
      const std::uint64_t stream = logprob_stream(traj.traj_index, rec.j);
      nlohmann::json line = {
          {"query_id", traj.query_id},
          {"traj_index", traj.traj_index},
          {"j", rec.j},
          {"logp_new", provider.logprobs(seq, policy::LogProbRole::kNew, stream)},
          {"logp_old", provider.logprobs(seq, policy::LogProbRole::kOld, stream)},
          {"logp_infer",
           provider.logprobs(seq, policy::LogProbRole::kInfer, stream)},
      };
      out << line.dump() << '\n';
    }
  }
}

std::map<LogProbKey, policy::FileLogProbProvider::Entry> read_logprobs(
    std::istream& in) {
  std::map<LogProbKey, policy::FileLogProbProvider::Entry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    LogProbKey key{j.at("query_id"), j.at("traj_index"), j.at("j")};
    policy::FileLogProbProvider::Entry entry;
    entry.logp_new = j.at("logp_new").get<std::vector<double>>();
    entry.logp_old = j.at("logp_old").get<std::vector<double>>();
    entry.logp_infer = j.at("logp_infer").get<std::vector<double>>();
    out.emplace(std::move(key), std::move(entry));
  }
  return out;
}

}  // namespace itrl::pipeline
