#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "itrl/reward.hpp"
#include "itrl/rollout.hpp"

namespace itrl::log {

/// JSON Lines trajectory log: one line per IterationRecord (termination only
/// on the last line of a trajectory) followed by one reward line per
/// trajectory. Raw model text is stored verbatim under standard JSON string
/// escaping.

struct RewardDetail {
  double task_reward = 0.0;
  double efficiency_reward = 0.0;
  double combined = 0.0;
  std::string cause;
};

void write_group(std::ostream& out, const reward::RolloutGroup& group,
                 const std::vector<RewardDetail>& details);

/// Parsed-back view of one trajectory in a log.
struct LoggedTrajectory {
  std::string query_id;
  int traj_index = 0;
  std::vector<rollout::IterationRecord> records;  // raw_output + counters
  std::optional<rollout::Termination> termination;
  std::optional<RewardDetail> reward;
};

struct LoggedLog {
  /// Trajectories in file order, keyed listing preserved per (query, traj).
  std::vector<LoggedTrajectory> trajectories;
};

LoggedLog read_log(std::istream& in);

/// Per-query aggregates in the trajectory-metrics sense: TOK and LAT summed
/// within each trajectory, then averaged over trajectories of the query.
struct QueryReport {
  std::string query_id;
  std::size_t trajectories = 0;
  double mean_tok = 0.0;
  double mean_lat = 0.0;
  double mean_turns = 0.0;
  std::map<int, std::size_t> turns_histogram;
};

std::vector<QueryReport> aggregate_report(const LoggedLog& log);

}  // namespace itrl::log
