#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "itrl/policy.hpp"
#include "itrl/tokenizer.hpp"

namespace itrl::reward {
struct RolloutGroup;
}

namespace itrl::rollout {

struct RolloutConfig {
  int phi = 5;            // max iterations
  int group_size = 8;     // trajectories per query
  int gen_budget = 10240; // max new tokens per iteration
  double temperature = 1.0;
  double top_p = 1.0;
  int history_budget = 1000;  // token cap on the injected summary
  std::uint64_t seed = 0;
  int concurrency = 8;  // parallel trajectories within a group
};

struct EmptySummary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PolicyUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Result of the format extractor. For well-formed output exactly one of
/// summary/conclusion is set; both empty plus empty reasoning signals a
/// format failure.
struct ParsedOutput {
  std::string reasoning;
  std::optional<std::string> summary;
  std::optional<std::string> conclusion;
};

enum class Termination { kConclusion, kFormatFailure, kIterationCap };

std::string to_string(Termination t);

struct IterationRecord {
  int j = 0;  // 1-based iteration index
  std::string prompt_text;
  std::string history_summary;  // injected (post-truncation) summary, "" for j=1
  bool truncated_history = false;
  std::string raw_output;
  ParsedOutput parsed;
  std::int64_t prompt_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_s = 0.0;
  /// 0-run over the injected summary tokens, 1-run over the output tokens
  /// (the per-round sequence the objective kernel sees is summary ++ output).
  std::vector<std::uint8_t> loss_mask;
};

struct Trajectory {
  std::string query_id;
  int traj_index = 0;
  std::vector<IterationRecord> records;
  Termination termination = Termination::kFormatFailure;
  bool aborted = false;       // policy transport failure; no valid records
  std::string abort_reason;

  int iteration_count() const { return static_cast<int>(records.size()); }
  const std::string& final_output() const { return records.back().raw_output; }
};

/// Chat-templated query, plus the history block when a previous summary is
/// given. Throws EmptySummary when the summary is present but whitespace.
TokenSeq build_prompt(const std::string& query,
                      const std::optional<std::string>& prev_summary,
                      const Tokenizer& tok);

/// Format extractor F: splits a raw generation into reasoning plus either a
/// summary or a conclusion. Missing/unclosed think block -> neither field set.
ParsedOutput extract_fields(const std::string& raw);

/// Runs one trajectory to termination. A policy transport failure (after the
/// policy's own retries) yields an aborted trajectory, never a silent drop.
Trajectory run_trajectory(const std::string& query_id, const std::string& query,
                          policy::Policy& pol, const RolloutConfig& cfg,
                          const Tokenizer& tok, int traj_index = 0);

/// G independent trajectories for one query; rewards/advantages are left for
/// the reward and objective stages. Aborted trajectories are kept (flagged);
/// throws PolicyUnavailable only if every trajectory aborts.
reward::RolloutGroup run_group(const std::string& query_id,
                               const std::string& query, policy::Policy& pol,
                               const RolloutConfig& cfg, const Tokenizer& tok);

struct TrajectoryMetrics {
  std::int64_t tok = 0;
  double lat = 0.0;
  int num_turns = 0;
};

TrajectoryMetrics aggregate_metrics(const Trajectory& t);

}  // namespace itrl::rollout
