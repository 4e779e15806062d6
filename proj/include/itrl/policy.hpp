#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "itrl/tokenizer.hpp"

namespace itrl::policy {

struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;
};

struct Generation {
  std::string text;
  std::int64_t token_count = 0;
  double latency_s = 0.0;
};

struct ScheduleExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WireError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-trajectory generation cursor. Sessions are not shared across
/// trajectories; the parent Policy handle is.
class PolicySession {
 public:
  virtual ~PolicySession() = default;
  virtual Generation generate(const std::string& prompt, int max_tokens,
                              const SamplingParams& sampling) = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  /// stream identifies the trajectory; deterministic policies derive all
  /// randomness from (their seed, stream).
  virtual std::unique_ptr<PolicySession> start_session(std::uint64_t stream) = 0;
};

/// Replays a fixed list of output templates, one per iteration, truncated to
/// the generation budget. Throws ScheduleExhausted past the end.
class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(std::vector<std::string> schedule, const Tokenizer& tok);
  std::unique_ptr<PolicySession> start_session(std::uint64_t stream) override;

 private:
  std::vector<std::string> schedule_;
  const Tokenizer& tok_;
};

/// Seeded fuzz policy: each iteration draws one of {summary, correct
/// conclusion, wrong conclusion, malformed} with the configured weights.
/// Deterministic given (seed, stream).
struct StochasticWeights {
  double summary = 0.5;
  double conclusion_correct = 0.25;
  double conclusion_wrong = 0.25;
  double malformed = 0.0;
};

class StochasticScriptedPolicy final : public Policy {
 public:
  StochasticScriptedPolicy(StochasticWeights weights, std::string correct_answer,
                           std::string wrong_answer, std::uint64_t seed,
                           const Tokenizer& tok);
  std::unique_ptr<PolicySession> start_session(std::uint64_t stream) override;

 private:
  StochasticWeights weights_;
  std::string correct_answer_;
  std::string wrong_answer_;
  std::uint64_t seed_;
  const Tokenizer& tok_;
};

struct RetryPolicy {
  int max_attempts = 3;
  double initial_backoff_s = 0.25;  // doubled per attempt
};

/// Client for OpenAI-compatible completions servers
/// (POST {endpoint}/v1/completions). 5xx and transport errors are retried
/// with bounded exponential backoff; 4xx fail immediately. A shared
/// max-in-flight limit bounds concurrent requests across all sessions.
class WirePolicy final : public Policy {
 public:
  WirePolicy(std::string endpoint, std::string model, const Tokenizer& tok,
             RetryPolicy retry = {}, int max_in_flight = 16,
             double timeout_s = 30.0);
  ~WirePolicy() override;
  std::unique_ptr<PolicySession> start_session(std::uint64_t stream) override;

  struct Impl;  // shared with the session type in policy.cpp

 private:
  std::shared_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Log-prob providers feeding the objective kernel.

enum class LogProbRole { kNew, kOld, kInfer };

struct Misaligned : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class LogProbProvider {
 public:
  virtual ~LogProbProvider() = default;
  /// One scalar per token, aligned with the sequence. stream disambiguates
  /// (trajectory, round) so repeated calls replay identically.
  virtual std::vector<double> logprobs(const TokenSeq& tokens, LogProbRole role,
                                       std::uint64_t stream) = 0;
};

/// Seeded synthetic source. divergence controls how far the inference-engine
/// log-probs drift from the training-engine ones, which controls the k_t
/// distribution seen by IcePop. divergence 0 makes old == infer elementwise.
class SyntheticLogProbProvider final : public LogProbProvider {
 public:
  SyntheticLogProbProvider(std::uint64_t seed, double divergence);
  std::vector<double> logprobs(const TokenSeq& tokens, LogProbRole role,
                               std::uint64_t stream) override;

 private:
  std::uint64_t seed_;
  double divergence_;
};

/// Pre-loaded aligned arrays keyed by stream. Throws Misaligned when the
/// stored array length does not match the token count.
class FileLogProbProvider final : public LogProbProvider {
 public:
  struct Entry {
    std::vector<double> logp_new, logp_old, logp_infer;
  };
  explicit FileLogProbProvider(std::map<std::uint64_t, Entry> entries);
  std::vector<double> logprobs(const TokenSeq& tokens, LogProbRole role,
                               std::uint64_t stream) override;

 private:
  std::map<std::uint64_t, Entry> entries_;
};

}  // namespace itrl::policy
