#pragma once

#include <string>
#include <string_view>

#include "itrl/tokenizer.hpp"

namespace itrl {

inline constexpr std::string_view kHistoryOpen = "<history>\n";
inline constexpr std::string_view kHistoryClose = "\n</history>";

/// Minimal built-in chat template: <|user|>{q}<|assistant|>.
/// External templates can be layered on top by pre-rendering the query.
inline std::string render_chat(std::string_view query) {
  std::string out;
  out.reserve(query.size() + 24);
  out += "<|user|>";
  out += query;
  out += "<|assistant|>";
  return out;
}

/// Wraps a summary in history delimiters for injection into the next prompt.
inline std::string render_history(std::string_view summary) {
  std::string out;
  out.reserve(summary.size() + kHistoryOpen.size() + kHistoryClose.size());
  out += kHistoryOpen;
  out += summary;
  out += kHistoryClose;
  return out;
}

/// Token cost of the bare history delimiters under the given tokenizer.
inline std::size_t history_tag_overhead(const Tokenizer& tok) {
  return tok.count_tokens(kHistoryOpen) + tok.count_tokens(kHistoryClose);
}

}  // namespace itrl
