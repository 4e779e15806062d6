#include "itrl/policy.hpp"

#include <chrono>
#include <cmath>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "itrl/rng.hpp"

namespace itrl::policy {

namespace {

std::string truncate_to_budget(const std::string& text, int max_tokens,
                               const Tokenizer& tok) {
  TokenSeq ids = tok.encode(text);
  if (static_cast<int>(ids.size()) <= max_tokens) return text;
  ids.resize(static_cast<std::size_t>(max_tokens));
  return tok.decode(ids);
}

Generation make_generation(std::string text, const Tokenizer& tok,
                           double latency_s) {
  Generation g;
  g.token_count = static_cast<std::int64_t>(tok.count_tokens(text));
  g.text = std::move(text);
  g.latency_s = latency_s;
  return g;
}

}  // namespace

// --------------------------------------------------------------------------
// ScriptedPolicy

namespace {
class ScriptedSession final : public PolicySession {
 public:
  ScriptedSession(const std::vector<std::string>& schedule, const Tokenizer& tok)
      : schedule_(schedule), tok_(tok) {}

  Generation generate(const std::string&, int max_tokens,
                      const SamplingParams&) override {
    if (cursor_ >= schedule_.size())
      throw ScheduleExhausted("scripted policy: schedule exhausted at step " +
                              std::to_string(cursor_));
    std::string text =
        truncate_to_budget(schedule_[cursor_++], max_tokens, tok_);
    return make_generation(std::move(text), tok_, 0.0);
  }

 private:
  const std::vector<std::string>& schedule_;
  const Tokenizer& tok_;
  std::size_t cursor_ = 0;
};
}  // namespace

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> schedule,
                               const Tokenizer& tok)
    : schedule_(std::move(schedule)), tok_(tok) {}

std::unique_ptr<PolicySession> ScriptedPolicy::start_session(std::uint64_t) {
  return std::make_unique<ScriptedSession>(schedule_, tok_);
}

// --------------------------------------------------------------------------
// StochasticScriptedPolicy

namespace {
class StochasticSession final : public PolicySession {
 public:
  StochasticSession(const StochasticWeights& w, const std::string& correct,
                    const std::string& wrong, std::uint64_t state,
                    const Tokenizer& tok)
      : weights_(w), correct_(correct), wrong_(wrong), state_(state),
        tok_(tok) {}

  Generation generate(const std::string&, int max_tokens,
                      const SamplingParams&) override {
    state_ = splitmix64(state_);
    const double u = to_unit(state_) *
                     (weights_.summary + weights_.conclusion_correct +
                      weights_.conclusion_wrong + weights_.malformed);
    ++round_;
    std::string text;
    if (u < weights_.summary) {
      text = "<think>\nexploring branch " + std::to_string(round_) +
             "\n</think><summary>progress through step " +
             std::to_string(round_) + "</summary>";
    } else if (u < weights_.summary + weights_.conclusion_correct) {
      text = "<think>\nfinal check " + std::to_string(round_) + "\n</think>" +
             correct_;
    } else if (u < weights_.summary + weights_.conclusion_correct +
                       weights_.conclusion_wrong) {
      text = "<think>\nfinal check " + std::to_string(round_) + "\n</think>" +
             wrong_;
    } else {
      text = "loose text without any reasoning tags (round " +
             std::to_string(round_) + ")";
    }
    return make_generation(truncate_to_budget(text, max_tokens, tok_), tok_,
                           0.0);
  }

 private:
  StochasticWeights weights_;
  const std::string& correct_;
  const std::string& wrong_;
  std::uint64_t state_;
  const Tokenizer& tok_;
  int round_ = 0;
};
}  // namespace

StochasticScriptedPolicy::StochasticScriptedPolicy(
    StochasticWeights weights, std::string correct_answer,
    std::string wrong_answer, std::uint64_t seed, const Tokenizer& tok)
    : weights_(weights), correct_answer_(std::move(correct_answer)),
      wrong_answer_(std::move(wrong_answer)), seed_(seed), tok_(tok) {}

std::unique_ptr<PolicySession> StochasticScriptedPolicy::start_session(
    std::uint64_t stream) {
  return std::make_unique<StochasticSession>(
      weights_, correct_answer_, wrong_answer_, mix_seed(seed_, stream), tok_);
}

// --------------------------------------------------------------------------
// WirePolicy

struct WirePolicy::Impl {
  std::string endpoint;
  std::string model;
  const Tokenizer* tok;
  RetryPolicy retry;
  double timeout_s;
  std::counting_semaphore<> in_flight;

  Impl(std::string ep, std::string m, const Tokenizer& t, RetryPolicy r,
       int max_in_flight, double timeout)
      : endpoint(std::move(ep)), model(std::move(m)), tok(&t), retry(r),
        timeout_s(timeout), in_flight(max_in_flight) {}

  Generation complete(const std::string& prompt, int max_tokens,
                      const SamplingParams& sampling) {
    nlohmann::json body = {
        {"model", model},
        {"prompt", prompt},
        {"max_tokens", max_tokens},
        {"temperature", sampling.temperature},
        {"top_p", sampling.top_p},
        {"logprobs", 0},
    };
    const std::string payload = body.dump();

    std::string last_error;
    double backoff = retry.initial_backoff_s;
    for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
        backoff *= 2.0;
      }
      in_flight.acquire();
      const auto start = std::chrono::steady_clock::now();
      httplib::Client client(endpoint);
      client.set_connection_timeout(std::chrono::duration<double>(timeout_s));
      client.set_read_timeout(std::chrono::duration<double>(timeout_s));
      if (const char* token = std::getenv("ITRL_API_TOKEN"))
        client.set_bearer_token_auth(token);
      auto res = client.Post("/v1/completions", payload, "application/json");
      const double latency =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        start)
              .count();
      in_flight.release();

      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error: HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status >= 400)
        throw WireError("completions request rejected: HTTP " +
                        std::to_string(res->status));
      try {
        auto json = nlohmann::json::parse(res->body);
        std::string text = json.at("choices").at(0).at("text");
        // the server may overrun the budget; enforce it client-side
        text = truncate_to_budget(text, max_tokens, *tok);
        return make_generation(std::move(text), *tok, latency);
      } catch (const nlohmann::json::exception& e) {
        throw WireError(std::string("malformed completions response: ") +
                        e.what());
      }
    }
    throw WireError("completions request failed after " +
                    std::to_string(retry.max_attempts) +
                    " attempts: " + last_error);
  }
};

namespace {
class WireSession final : public PolicySession {
 public:
  explicit WireSession(std::shared_ptr<WirePolicy::Impl> impl)
      : impl_(std::move(impl)) {}
  Generation generate(const std::string& prompt, int max_tokens,
                      const SamplingParams& sampling) override {
    return impl_->complete(prompt, max_tokens, sampling);
  }

 private:
  std::shared_ptr<WirePolicy::Impl> impl_;
};
}  // namespace

WirePolicy::WirePolicy(std::string endpoint, std::string model,
                       const Tokenizer& tok, RetryPolicy retry,
                       int max_in_flight, double timeout_s)
    : impl_(std::make_shared<Impl>(std::move(endpoint), std::move(model), tok,
                                   retry, max_in_flight, timeout_s)) {}

WirePolicy::~WirePolicy() = default;

std::unique_ptr<PolicySession> WirePolicy::start_session(std::uint64_t) {
  return std::make_unique<WireSession>(impl_);
}

// --------------------------------------------------------------------------
// Log-prob providers

SyntheticLogProbProvider::SyntheticLogProbProvider(std::uint64_t seed,
                                                   double divergence)
    : seed_(seed), divergence_(divergence) {}

std::vector<double> SyntheticLogProbProvider::logprobs(const TokenSeq& tokens,
                                                       LogProbRole role,
                                                       std::uint64_t stream) {
  if (tokens.empty())
    throw std::invalid_argument("logprobs: empty token sequence");
  std::vector<double> out;
  out.reserve(tokens.size());
  const std::uint64_t base = mix_seed(seed_, stream);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const std::uint64_t word =
        splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(t) * 3 + 1) ^
                   splitmix64(static_cast<std::uint64_t>(tokens[t]) * 3 + 2));
    const double u_old = to_unit(word);
    const double u_new = to_unit(splitmix64(word ^ 0x1111111111111111ULL));
    const double u_inf = to_unit(splitmix64(word ^ 0x2222222222222222ULL));
    const double logp_old = -(0.1 + 2.9 * u_old);
    switch (role) {
      case LogProbRole::kOld:
        out.push_back(logp_old);
        break;
      case LogProbRole::kNew:
        out.push_back(logp_old + 0.3 * (2.0 * u_new - 1.0));
        break;
      case LogProbRole::kInfer:
        out.push_back(logp_old + divergence_ * (2.0 * u_inf - 1.0));
        break;
    }
  }
  return out;
}

FileLogProbProvider::FileLogProbProvider(std::map<std::uint64_t, Entry> entries)
    : entries_(std::move(entries)) {}

std::vector<double> FileLogProbProvider::logprobs(const TokenSeq& tokens,
                                                  LogProbRole role,
                                                  std::uint64_t stream) {
  auto it = entries_.find(stream);
  if (it == entries_.end())
    throw Misaligned("no log-prob entry for stream " + std::to_string(stream));
  const std::vector<double>* arr = nullptr;
  switch (role) {
    case LogProbRole::kNew: arr = &it->second.logp_new; break;
    case LogProbRole::kOld: arr = &it->second.logp_old; break;
    case LogProbRole::kInfer: arr = &it->second.logp_infer; break;
  }
  if (arr->size() != tokens.size())
    throw Misaligned("log-prob array length " + std::to_string(arr->size()) +
                     " != token count " + std::to_string(tokens.size()));
  return *arr;
}

}  // namespace itrl::policy
