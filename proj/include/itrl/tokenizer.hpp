#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace itrl {

/// Ordered token identifiers. All length accounting (eta, gamma, generation
/// budgets) is defined over these, never over raw characters.
using TokenSeq = std::vector<std::int32_t>;

struct InvalidTokenId : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic, stateless text<->token mapping. Implementations must be
/// pure: identical input always yields the identical TokenSeq.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::string name() const = 0;
  virtual TokenSeq encode(std::string_view text) const = 0;
  /// Inverse of encode. Throws InvalidTokenId for ids outside the vocabulary.
  virtual std::string decode(const TokenSeq& seq) const = 0;

  std::size_t count_tokens(std::string_view text) const {
    return encode(text).size();
  }
};

/// Built-in byte-level tokenizer: one id per byte, id == byte value.
/// Lossless for arbitrary UTF-8 (or binary) input.
class ByteTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "byte"; }
  TokenSeq encode(std::string_view text) const override;
  std::string decode(const TokenSeq& seq) const override;
};

/// Shared built-in tokenizer instance.
const Tokenizer& builtin_tokenizer();

/// Name-keyed registry for external tokenizers. Registered tokenizers must
/// be deterministic; no result caching happens across handles.
void register_tokenizer(std::shared_ptr<Tokenizer> tok);
std::shared_ptr<Tokenizer> find_tokenizer(const std::string& name);

}  // namespace itrl
