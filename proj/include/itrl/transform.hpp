#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "itrl/tokenizer.hpp"

namespace itrl::transform {

struct FormatMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OversizeParagraph : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SummaryTooLong : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArityMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ClientFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VanillaSample {
  std::string query;
  std::string reasoning;
  std::string conclusion;
};

/// Ordered segments; joining with the delimiter reproduces the extracted
/// reasoning text byte-exactly.
struct SegmentList {
  static constexpr const char* kDelimiter = "\n\n";
  std::vector<std::string> segments;

  std::string join() const;
};

enum class IterationKind { kFirst, kMiddle, kLast };

std::string to_string(IterationKind k);

/// One cold-start supervised example. loss_mask aligns with
/// prompt_tokens ++ history_tokens ++ response_tokens: zeros over prompt and
/// history, ones over the response.
struct TrainingInstance {
  IterationKind kind = IterationKind::kLast;
  int iteration_index = 0;  // 1-based
  std::string prompt_text;
  std::string history_text;  // "" for the first iteration
  std::string response_text;
  TokenSeq prompt_tokens;
  TokenSeq history_tokens;
  TokenSeq response_tokens;
  std::vector<std::uint8_t> loss_mask;
};

/// Splits raw vanilla output at the closing think tag, applying the pattern
/// ^<think>\n(.+)\n</think>(.+)$ (dotall, greedy). Throws FormatMismatch when
/// the pattern does not match.
VanillaSample extract_vanilla(const std::string& raw,
                              const std::string& query = "");

/// Greedy paragraph aggregation: split on "\n\n", drop empty paragraphs
/// (their delimiters are folded into the neighbouring segment so the join
/// stays byte-exact), and pack consecutive paragraphs while the joined text
/// stays within eta tokens. Throws OversizeParagraph when a single paragraph
/// exceeds eta on its own.
SegmentList partition_reasoning(const std::string& reasoning, std::size_t eta,
                                const Tokenizer& tok);

struct Message {
  std::string role;  // "user" or "assistant"
  std::string content;
};

/// Summary-generation instructions, sent as the final user turn.
extern const std::string kFirstSummaryPrompt;        // first segment
extern const std::string kContinuationSummaryPrompt; // later segments
extern const std::string kContinuationNudge;         // mid-conversation filler

/// Multi-turn message list for one summary request. prev_summary empty means
/// the first-iteration form.
std::vector<Message> build_summary_messages(const std::string& query,
                                            const std::string& segment,
                                            const std::optional<std::string>& prev_summary);

class Summarizer {
 public:
  virtual ~Summarizer() = default;
  /// One candidate summary for the given conversation. Throws ClientFailure
  /// on transport errors (after any client-level retries).
  virtual std::string complete(const std::vector<Message>& messages) = 0;
};

/// Fixed per-call schedule of candidates, for tests.
class StubSummarizer final : public Summarizer {
 public:
  explicit StubSummarizer(std::vector<std::string> candidates);
  std::string complete(const std::vector<Message>& messages) override;
  int calls() const { return calls_; }

 private:
  std::vector<std::string> candidates_;
  int calls_ = 0;
};

struct SummaryResult {
  std::string summary;
  int attempts = 0;
};

/// Requests candidates until one fits within gamma tokens; throws
/// SummaryTooLong after max_attempts oversize candidates.
SummaryResult summarize_segment(Summarizer& client, const std::string& query,
                                const std::string& segment,
                                const std::optional<std::string>& prev_summary,
                                std::size_t gamma, const Tokenizer& tok,
                                int max_attempts = 10);

/// Emits one TrainingInstance per segment following the first/middle/last
/// case split. Requires summaries.size() == segments.size() - 1
/// (ArityMismatch otherwise).
std::vector<TrainingInstance> build_instances(
    const VanillaSample& sample, const SegmentList& segments,
    const std::vector<std::string>& summaries, const Tokenizer& tok);

/// Per-cause discard counters; the pipeline never drops a sample silently.
struct DiscardStats {
  std::size_t format_mismatch = 0;
  std::size_t oversize_paragraph = 0;
  std::size_t summary_too_long = 0;

  std::size_t total() const {
    return format_mismatch + oversize_paragraph + summary_too_long;
  }
};

/// Full pipeline for one sample: extract, partition, summarize, build.
/// Returns std::nullopt and bumps the matching counter when the sample is
/// discarded.
std::optional<std::vector<TrainingInstance>> transform_sample(
    const std::string& query, const std::string& raw_response,
    Summarizer& client, std::size_t eta, std::size_t gamma,
    const Tokenizer& tok, DiscardStats& stats);

}  // namespace itrl::transform
