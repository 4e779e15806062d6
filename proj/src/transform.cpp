#include "itrl/transform.hpp"

#include "itrl/prompt.hpp"

namespace itrl::transform {

std::string SegmentList::join() const {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out += kDelimiter;
    out += segments[i];
  }
  return out;
}

std::string to_string(IterationKind k) {
  switch (k) {
    case IterationKind::kFirst: return "first";
    case IterationKind::kMiddle: return "middle";
    case IterationKind::kLast: return "last";
  }
  return "unknown";
}

VanillaSample extract_vanilla(const std::string& raw,
                              const std::string& query) {
  // ^<think>\n(.+)\n</think>(.+)$ with dotall semantics and greedy groups:
  // the reasoning group extends to the LAST "\n</think>" that still leaves a
  // nonempty conclusion.
  constexpr std::string_view kOpen = "<think>\n";
  constexpr std::string_view kClose = "\n</think>";
  if (raw.size() < kOpen.size() ||
      std::string_view(raw).substr(0, kOpen.size()) != kOpen)
    throw FormatMismatch("extract_vanilla: missing <think> header");
  const std::size_t body_start = kOpen.size();
  // greedy (.+): search the close tag from the right, requiring at least one
  // reasoning byte and one conclusion byte.
  std::size_t close = raw.rfind(kClose);
  while (close != std::string::npos && close + kClose.size() >= raw.size())
    close = (close == 0) ? std::string::npos : raw.rfind(kClose, close - 1);
  if (close == std::string::npos || close <= body_start)
    throw FormatMismatch("extract_vanilla: pattern does not match");
  VanillaSample sample;
  sample.query = query;
  sample.reasoning = raw.substr(body_start, close - body_start);
  sample.conclusion = raw.substr(close + kClose.size());
  return sample;
}

SegmentList partition_reasoning(const std::string& reasoning, std::size_t eta,
                                const Tokenizer& tok) {
  if (eta < 1) throw std::invalid_argument("partition_reasoning: eta < 1");
  const std::string delim = SegmentList::kDelimiter;

  // Split on the delimiter, keeping empty parts so they can be folded back.
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = reasoning.find(delim, pos);
    if (next == std::string::npos) {
      parts.push_back(reasoning.substr(pos));
      break;
    }
    parts.push_back(reasoning.substr(pos, next - pos));
    pos = next + delim.size();
  }

  // Fold empty parts (runs of consecutive delimiters) into the next nonempty
  // paragraph so that joining units with a single delimiter reproduces the
  // input byte-exactly.
  std::vector<std::string> units;
  std::string pending;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].empty()) {
      pending += delim;
    } else {
      units.push_back(pending + parts[k]);
      pending.clear();
    }
  }
  if (!pending.empty()) {
    // trailing delimiters attach to the last unit
    if (units.empty()) {
      units.push_back(reasoning);  // reasoning was delimiters only
    } else {
      units.back() += pending;
    }
  }

  SegmentList out;
  std::string current;
  for (const std::string& unit : units) {
    if (tok.count_tokens(unit) > eta)
      throw OversizeParagraph("partition_reasoning: single paragraph of " +
                              std::to_string(tok.count_tokens(unit)) +
                              " tokens exceeds eta=" + std::to_string(eta));
    if (current.empty()) {
      current = unit;
      continue;
    }
    const std::string candidate = current + delim + unit;
    if (tok.count_tokens(candidate) <= eta) {
      current = candidate;
    } else {
      out.segments.push_back(std::move(current));
      current = unit;
    }
  }
  if (!current.empty()) out.segments.push_back(std::move(current));
  return out;
}

const std::string kFirstSummaryPrompt =
    "Please summarize the reasoning and conclusions you reached in your "
    "previous truncated response. Here are the specific requirements:\n\n"
    "1. You need to summarize the key steps and corresponding important "
    "conclusions you took in all the reasoning processes in chronological "
    "order;\n"
    "2. You need to summarize the steps and conclusions that helped to "
    "ultimately solve the problem;\n"
    "3. You do not need to provide the final answer or any additional "
    "notes;\n"
    "4. Please summarize as concisely as possible, but do not omit any "
    "important steps or conclusions;\n"
    "5. Please note that your reasoning may not be complete;\n"
    "6. Please do not provide any reasoning or conclusions that were not "
    "presented.\n"
    "7. Please use '*' to list all summaries.";

const std::string kContinuationSummaryPrompt =
    "Please update your reasoning history based on the reasoning and "
    "conclusions reached in the previous truncated response. The specific "
    "requirements are as follows:\n\n"
    "1. You need to summarize the key steps and corresponding important "
    "conclusions you took in all reasoning processes (including your entire "
    "reasoning history) in chronological order;\n"
    "2. You need to summarize the steps and conclusions that helped to "
    "ultimately solve the problem;\n"
    "3. You do not need to provide the final answer or any additional "
    "notes;\n"
    "4. Please summarize as concisely as possible, but do not omit any "
    "important steps or conclusions;\n"
    "5. Please note that your reasoning may not be complete;\n"
    "6. Please do not provide any reasoning or conclusions that were not "
    "presented.\n"
    "7. Please use '*' to list all summaries.";

const std::string kContinuationNudge =
    "Please continue your reasoning based on your past reasoning history.";

std::vector<Message> build_summary_messages(
    const std::string& query, const std::string& segment,
    const std::optional<std::string>& prev_summary) {
  if (!prev_summary) {
    return {{"user", query},
            {"assistant", segment},
            {"user", kFirstSummaryPrompt}};
  }
  return {{"user", query},
          {"assistant", *prev_summary},
          {"user", kContinuationNudge},
          {"assistant", segment},
          {"user", kContinuationSummaryPrompt}};
}

StubSummarizer::StubSummarizer(std::vector<std::string> candidates)
    : candidates_(std::move(candidates)) {}

std::string StubSummarizer::complete(const std::vector<Message>&) {
  const std::size_t i =
      std::min(static_cast<std::size_t>(calls_), candidates_.size() - 1);
  ++calls_;
  return candidates_[i];
}

SummaryResult summarize_segment(Summarizer& client, const std::string& query,
                                const std::string& segment,
                                const std::optional<std::string>& prev_summary,
                                std::size_t gamma, const Tokenizer& tok,
                                int max_attempts) {
  if (gamma < 1) throw std::invalid_argument("summarize_segment: gamma < 1");
  if (segment.empty())
    throw std::invalid_argument("summarize_segment: empty segment");
  const auto messages = build_summary_messages(query, segment, prev_summary);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    std::string candidate = client.complete(messages);
    if (tok.count_tokens(candidate) <= gamma)
      return {std::move(candidate), attempt};
  }
  throw SummaryTooLong("summarize_segment: no candidate within " +
                       std::to_string(gamma) + " tokens after " +
                       std::to_string(max_attempts) + " attempts");
}

std::vector<TrainingInstance> build_instances(
    const VanillaSample& sample, const SegmentList& segments,
    const std::vector<std::string>& summaries, const Tokenizer& tok) {
  const std::size_t n = segments.segments.size();
  if (summaries.size() + 1 != n)
    throw ArityMismatch("build_instances: " + std::to_string(summaries.size()) +
                        " summaries for " + std::to_string(n) + " segments");

  std::vector<TrainingInstance> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    TrainingInstance inst;
    inst.iteration_index = static_cast<int>(i);
    if (i == n)
      inst.kind = IterationKind::kLast;
    else
      inst.kind = (i == 1) ? IterationKind::kFirst : IterationKind::kMiddle;

    inst.prompt_text = render_chat(sample.query);
    if (i > 1) inst.history_text = render_history(summaries[i - 2]);

    const std::string& segment = segments.segments[i - 1];
    if (i < n)
      inst.response_text = "<think>\n" + segment + "\n</think><summary>" +
                           summaries[i - 1] + "</summary>";
    else
      inst.response_text = "<think>\n" + segment + "\n</think>" +
                           sample.conclusion;

    inst.prompt_tokens = tok.encode(inst.prompt_text);
    inst.history_tokens = tok.encode(inst.history_text);
    inst.response_tokens = tok.encode(inst.response_text);
    inst.loss_mask.assign(inst.prompt_tokens.size() + inst.history_tokens.size(),
                          0);
    inst.loss_mask.insert(inst.loss_mask.end(), inst.response_tokens.size(), 1);
    out.push_back(std::move(inst));
  }
  return out;
}

std::optional<std::vector<TrainingInstance>> transform_sample(
    const std::string& query, const std::string& raw_response,
    Summarizer& client, std::size_t eta, std::size_t gamma,
    const Tokenizer& tok, DiscardStats& stats) {
  VanillaSample sample;
  try {
    sample = extract_vanilla(raw_response, query);
  } catch (const FormatMismatch&) {
    ++stats.format_mismatch;
    return std::nullopt;
  }

  SegmentList segments;
  try {
    segments = partition_reasoning(sample.reasoning, eta, tok);
  } catch (const OversizeParagraph&) {
    ++stats.oversize_paragraph;
    return std::nullopt;
  }

  // Summaries are strictly sequential within a sample: s_i conditions on
  // s_{i-1}.
  std::vector<std::string> summaries;
  std::optional<std::string> prev;
  try {
    for (std::size_t i = 0; i + 1 < segments.segments.size(); ++i) {
      auto result = summarize_segment(client, query, segments.segments[i],
                                      prev, gamma, tok);
      prev = result.summary;
      summaries.push_back(std::move(result.summary));
    }
  } catch (const SummaryTooLong&) {
    ++stats.summary_too_long;
    return std::nullopt;
  }

  return build_instances(sample, segments, summaries, tok);
}

}  // namespace itrl::transform
