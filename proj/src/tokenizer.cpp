#include "itrl/tokenizer.hpp"

#include <map>
#include <mutex>

namespace itrl {

TokenSeq ByteTokenizer::encode(std::string_view text) const {
  TokenSeq out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<std::int32_t>(c));
  return out;
}

std::string ByteTokenizer::decode(const TokenSeq& seq) const {
  std::string out;
  out.reserve(seq.size());
  for (std::int32_t id : seq) {
    if (id < 0 || id > 255)
      throw InvalidTokenId("byte tokenizer: id out of range: " +
                           std::to_string(id));
    out.push_back(static_cast<char>(static_cast<unsigned char>(id)));
  }
  return out;
}

const Tokenizer& builtin_tokenizer() {
  static const ByteTokenizer tok;
  return tok;
}

namespace {
std::mutex g_registry_mutex;
std::map<std::string, std::shared_ptr<Tokenizer>>& registry() {
  static std::map<std::string, std::shared_ptr<Tokenizer>> r;
  return r;
}
}  // namespace

void register_tokenizer(std::shared_ptr<Tokenizer> tok) {
  std::lock_guard<std::mutex> lock(g_registry_mutex);
  registry()[tok->name()] = std::move(tok);
}

std::shared_ptr<Tokenizer> find_tokenizer(const std::string& name) {
  std::lock_guard<std::mutex> lock(g_registry_mutex);
  auto it = registry().find(name);
  return it == registry().end() ? nullptr : it->second;
}

}  // namespace itrl
