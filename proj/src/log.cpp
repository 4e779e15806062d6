#include "itrl/log.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace itrl::log {

namespace {

rollout::Termination termination_from_string(const std::string& s) {
  if (s == "conclusion") return rollout::Termination::kConclusion;
  if (s == "iteration_cap") return rollout::Termination::kIterationCap;
  if (s == "format_failure") return rollout::Termination::kFormatFailure;
  throw std::runtime_error("trajectory log: unknown termination '" + s + "'");
}

}  // namespace

void write_group(std::ostream& out, const reward::RolloutGroup& group,
                 const std::vector<RewardDetail>& details) {
  for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
    const rollout::Trajectory& traj = group.trajectories[i];
    for (const rollout::IterationRecord& rec : traj.records) {
      nlohmann::json line = {
          {"type", "iteration"},
          {"query_id", traj.query_id},
          {"traj_index", traj.traj_index},
          {"j", rec.j},
          {"prompt_tokens", rec.prompt_tokens},
          {"output_tokens", rec.output_tokens},
          {"latency_s", rec.latency_s},
          {"summary_present", rec.parsed.summary.has_value()},
          {"truncated_history", rec.truncated_history},
          {"raw_output", rec.raw_output},
      };
      if (rec.j == traj.iteration_count())
        line["termination"] = rollout::to_string(traj.termination);
      out << line.dump() << '\n';
    }
    if (i < details.size()) {
      const RewardDetail& d = details[i];
      nlohmann::json line = {
          {"type", "reward"},
          {"query_id", traj.query_id},
          {"traj_index", traj.traj_index},
          {"task_reward", d.task_reward},
          {"efficiency_reward", d.efficiency_reward},
          {"combined", d.combined},
          {"cause", d.cause},
      };
      out << line.dump() << '\n';
    }
  }
  for (const rollout::Trajectory& traj : group.aborted) {
    nlohmann::json line = {
        {"type", "aborted"},
        {"query_id", traj.query_id},
        {"traj_index", traj.traj_index},
        {"reason", traj.abort_reason},
    };
    out << line.dump() << '\n';
  }
}

LoggedLog read_log(std::istream& in) {
  LoggedLog log;
  std::map<std::pair<std::string, int>, std::size_t> index;

  auto slot = [&](const std::string& query_id, int traj) -> LoggedTrajectory& {
    auto key = std::make_pair(query_id, traj);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, log.trajectories.size());
      log.trajectories.push_back({query_id, traj, {}, std::nullopt, std::nullopt});
      return log.trajectories.back();
    }
    return log.trajectories[it->second];
  };

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    const std::string type = j.at("type");
    if (type == "iteration") {
      LoggedTrajectory& t = slot(j.at("query_id"), j.at("traj_index"));
      rollout::IterationRecord rec;
      rec.j = j.at("j");
      rec.prompt_tokens = j.at("prompt_tokens");
      rec.output_tokens = j.at("output_tokens");
      rec.latency_s = j.at("latency_s");
      rec.truncated_history = j.at("truncated_history");
      rec.raw_output = j.at("raw_output");
      rec.parsed = rollout::extract_fields(rec.raw_output);
      if (j.contains("termination"))
        t.termination = termination_from_string(j.at("termination"));
      t.records.push_back(std::move(rec));
    } else if (type == "reward") {
      LoggedTrajectory& t = slot(j.at("query_id"), j.at("traj_index"));
      RewardDetail d;
      d.task_reward = j.at("task_reward");
      d.efficiency_reward = j.at("efficiency_reward");
      d.combined = j.at("combined");
      d.cause = j.at("cause");
      t.reward = d;
    } else if (type == "aborted") {
      // reported but carries no scorable rounds
      slot(j.at("query_id"), j.at("traj_index"));
    } else {
      throw std::runtime_error("trajectory log: unknown line type '" + type +
                               "'");
    }
  }
  return log;
}

std::vector<QueryReport> aggregate_report(const LoggedLog& log) {
  std::map<std::string, QueryReport> by_query;
  for (const LoggedTrajectory& t : log.trajectories) {
    QueryReport& r = by_query[t.query_id];
    r.query_id = t.query_id;
    if (t.records.empty()) continue;  // aborted
    ++r.trajectories;
    double tok = 0.0, lat = 0.0;
    for (const auto& rec : t.records) {
      tok += static_cast<double>(rec.output_tokens);
      lat += rec.latency_s;
    }
    r.mean_tok += tok;
    r.mean_lat += lat;
    r.mean_turns += static_cast<double>(t.records.size());
    ++r.turns_histogram[static_cast<int>(t.records.size())];
  }
  std::vector<QueryReport> out;
  out.reserve(by_query.size());
  for (auto& [_, r] : by_query) {
    if (r.trajectories > 0) {
      r.mean_tok /= static_cast<double>(r.trajectories);
      r.mean_lat /= static_cast<double>(r.trajectories);
      r.mean_turns /= static_cast<double>(r.trajectories);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace itrl::log
