// Command-line front end: transform | rollout | objective | costmodel | report.
// Exit codes: 0 ok, 1 I/O, 2 config, 3 rollout failure, 4 objective input.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "itrl/config.hpp"
#include "itrl/costmodel.hpp"
#include "itrl/log.hpp"
#include "itrl/pipeline.hpp"
#include "itrl/policy.hpp"
#include "itrl/prompt.hpp"
#include "itrl/reward.hpp"
#include "itrl/rollout.hpp"
#include "itrl/tokenizer.hpp"
#include "itrl/transform.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRollout = 3;
constexpr int kExitObjective = 4;

struct GlobalArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> concurrency;
  std::string output;
};

itrl::config::AppConfig load_config_or_exit(const GlobalArgs& g) {
  if (g.config_path.empty()) return {};
  auto cfg = itrl::config::load_config(g.config_path);  // throws ConfigError
  if (g.seed) cfg.seed = *g.seed;
  if (g.concurrency) cfg.concurrency = *g.concurrency;
  return cfg;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open input file: " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open output file: " + path);
  return out;
}

// Flattens the multi-turn summary conversation through the chat template and
// sends it over the completions protocol.
class WireSummarizer final : public itrl::transform::Summarizer {
 public:
  WireSummarizer(const itrl::config::AppConfig& cfg,
                 const itrl::Tokenizer& tok)
      : policy_(cfg.endpoint, cfg.model, tok, {}, cfg.max_in_flight),
        max_tokens_(static_cast<int>(cfg.gamma) * 4),
        sampling_{cfg.temperature, cfg.top_p} {}

  std::string complete(
      const std::vector<itrl::transform::Message>& messages) override {
    std::string prompt;
    for (const auto& m : messages) {
      prompt += (m.role == "assistant") ? "<|assistant|>" : "<|user|>";
      prompt += m.content;
    }
    prompt += "<|assistant|>";
    try {
      auto session = policy_.start_session(0);
      return session->generate(prompt, max_tokens_, sampling_).text;
    } catch (const itrl::policy::WireError& e) {
      throw itrl::transform::ClientFailure(e.what());
    }
  }

 private:
  itrl::policy::WirePolicy policy_;
  int max_tokens_;
  itrl::policy::SamplingParams sampling_;
};

int cmd_transform(const GlobalArgs& g, const std::string& input,
                  const std::string& summarizer_kind) {
  const auto cfg = load_config_or_exit(g);
  const itrl::Tokenizer& tok = itrl::builtin_tokenizer();

  std::unique_ptr<itrl::transform::Summarizer> summarizer;
  if (summarizer_kind == "wire") {
    summarizer = std::make_unique<WireSummarizer>(cfg, tok);
  } else {
    summarizer = std::make_unique<itrl::transform::StubSummarizer>(
        std::vector<std::string>{"* progress note"});
  }

  const auto records = read_jsonl(input);
  auto out = open_output(g.output);

  itrl::transform::DiscardStats stats;
  std::size_t instances = 0;
  for (const auto& rec : records) {
    const std::string id = rec.at("id");
    const std::string query = rec.at("query");
    const std::string raw = rec.at("raw_response");
    auto result = itrl::transform::transform_sample(query, raw, *summarizer,
                                                    cfg.eta, cfg.gamma, tok,
                                                    stats);
    if (!result) continue;
    for (const auto& inst : *result) {
      const std::size_t zeros =
          inst.prompt_tokens.size() + inst.history_tokens.size();
      nlohmann::json line = {
          {"source_id", id},
          {"iteration_index", inst.iteration_index},
          {"iteration_kind", itrl::transform::to_string(inst.kind)},
          {"prompt_text", inst.prompt_text},
          {"history_text", inst.history_text},
          {"response_text", inst.response_text},
          {"token_counts",
           {{"prompt", inst.prompt_tokens.size()},
            {"history", inst.history_tokens.size()},
            {"response", inst.response_tokens.size()}}},
          {"loss_mask_runlength", {zeros, inst.response_tokens.size()}},
      };
      out << line.dump() << '\n';
      ++instances;
    }
  }
  std::cout << "instances=" << instances << " discarded=" << stats.total()
            << " (format_mismatch=" << stats.format_mismatch
            << " oversize_paragraph=" << stats.oversize_paragraph
            << " summary_too_long=" << stats.summary_too_long << ")\n";
  return kExitOk;
}

std::unique_ptr<itrl::policy::Policy> make_policy(
    const itrl::config::AppConfig& cfg, const nlohmann::json& query_record,
    const itrl::Tokenizer& tok) {
  if (cfg.policy == "wire")
    return std::make_unique<itrl::policy::WirePolicy>(
        cfg.endpoint, cfg.model, tok, itrl::policy::RetryPolicy{},
        cfg.max_in_flight);
  if (cfg.policy == "scripted") {
    std::vector<std::string> schedule =
        query_record.at("schedule").get<std::vector<std::string>>();
    return std::make_unique<itrl::policy::ScriptedPolicy>(std::move(schedule),
                                                          tok);
  }
  itrl::policy::StochasticWeights weights;
  weights.summary = cfg.stochastic_p_summary;
  weights.malformed = cfg.stochastic_p_malformed;
  const double conclude =
      std::max(0.0, 1.0 - weights.summary - weights.malformed);
  weights.conclusion_correct = conclude * cfg.stochastic_p_correct;
  weights.conclusion_wrong = conclude * (1.0 - cfg.stochastic_p_correct);
  const std::string answer = query_record.value("answer", "42");
  return std::make_unique<itrl::policy::StochasticScriptedPolicy>(
      weights, answer, "definitely not " + answer, cfg.seed, tok);
}

int cmd_rollout(const GlobalArgs& g, const std::string& queries_path,
                const std::string& logprobs_path) {
  const auto cfg = load_config_or_exit(g);
  const itrl::Tokenizer& tok = itrl::builtin_tokenizer();
  const auto queries = read_jsonl(queries_path);
  auto out = open_output(g.output);

  itrl::reward::ExactMatchVerifier verifier;
  std::vector<itrl::log::LoggedTrajectory> logged;

  std::ostringstream log_buffer;
  for (const auto& q : queries) {
    auto policy = make_policy(cfg, q, tok);
    itrl::reward::RolloutGroup group;
    try {
      group = itrl::rollout::run_group(q.at("id"), q.at("query"), *policy,
                                       cfg.rollout_config(), tok);
    } catch (const itrl::rollout::PolicyUnavailable& e) {
      std::cerr << "rollout failed for query " << q.at("id") << ": "
                << e.what() << "\n";
      return kExitRollout;
    }
    const auto details = itrl::pipeline::score_group(
        group, verifier, q.value("answer", ""), cfg.phi,
        cfg.use_efficiency_reward, cfg.verifier_timeout_s);
    itrl::log::write_group(log_buffer, group, details);
  }
  out << log_buffer.str();
  out.flush();

  if (!logprobs_path.empty()) {
    std::istringstream replay(log_buffer.str());
    const auto parsed = itrl::log::read_log(replay);
    itrl::policy::SyntheticLogProbProvider provider(cfg.seed,
                                                    cfg.logprob_divergence);
    auto lp_out = open_output(logprobs_path);
    itrl::pipeline::write_logprobs(lp_out, parsed.trajectories, provider, tok,
                                   cfg.history_budget);
  }
  return kExitOk;
}

int cmd_objective(const GlobalArgs& g, const std::string& log_path,
                  const std::string& logprobs_path) {
  const auto cfg = load_config_or_exit(g);
  const itrl::Tokenizer& tok = itrl::builtin_tokenizer();

  std::ifstream log_in(log_path, std::ios::binary);
  if (!log_in) throw std::ios_base::failure("cannot open log: " + log_path);
  const auto parsed = itrl::log::read_log(log_in);

  std::ifstream lp_in(logprobs_path, std::ios::binary);
  if (!lp_in)
    throw std::ios_base::failure("cannot open logprobs: " + logprobs_path);
  const auto lp_entries = itrl::pipeline::read_logprobs(lp_in);

  // group trajectories by query, preserving file order
  std::vector<std::string> query_order;
  std::map<std::string, std::vector<itrl::log::LoggedTrajectory>> by_query;
  for (const auto& t : parsed.trajectories) {
    if (t.records.empty()) continue;  // aborted rows carry no tokens
    if (!by_query.count(t.query_id)) query_order.push_back(t.query_id);
    by_query[t.query_id].push_back(t);
  }

  const auto ocfg = cfg.objective_config();
  itrl::objective::TokenBatch batch;
  try {
    for (const std::string& qid : query_order) {
      auto& trajectories = by_query[qid];
      std::vector<double> rewards;
      std::vector<int> rounds;
      for (const auto& t : trajectories) {
        if (!t.reward) {
          std::cerr << "objective: rewards missing for query " << qid
                    << " traj " << t.traj_index << "\n";
          return kExitObjective;
        }
        rewards.push_back(t.reward->combined);
        rounds.push_back(static_cast<int>(t.records.size()));
      }
      const auto advantages =
          itrl::pipeline::round_advantages(rewards, rounds, ocfg);

      std::map<std::uint64_t, itrl::policy::FileLogProbProvider::Entry> entries;
      for (const auto& [key, entry] : lp_entries)
        if (key.query_id == qid)
          entries[itrl::pipeline::logprob_stream(key.traj_index, key.j)] =
              entry;
      itrl::policy::FileLogProbProvider provider(std::move(entries));

      const auto part = itrl::pipeline::build_token_batch(
          trajectories, advantages, provider, tok, cfg.history_budget);
      batch.logp_new.insert(batch.logp_new.end(), part.logp_new.begin(),
                            part.logp_new.end());
      batch.logp_old.insert(batch.logp_old.end(), part.logp_old.begin(),
                            part.logp_old.end());
      batch.logp_infer.insert(batch.logp_infer.end(), part.logp_infer.begin(),
                              part.logp_infer.end());
      batch.loss_mask.insert(batch.loss_mask.end(), part.loss_mask.begin(),
                             part.loss_mask.end());
      batch.advantage.insert(batch.advantage.end(), part.advantage.begin(),
                             part.advantage.end());
      batch.keys.insert(batch.keys.end(), part.keys.begin(), part.keys.end());
    }

    const auto result = itrl::objective::objective_value(batch, ocfg);

    double adv_min = 0.0, adv_max = 0.0, adv_sum = 0.0;
    for (std::size_t t = 0; t < batch.size(); ++t) {
      if (t == 0) adv_min = adv_max = batch.advantage[t];
      adv_min = std::min(adv_min, batch.advantage[t]);
      adv_max = std::max(adv_max, batch.advantage[t]);
      adv_sum += batch.advantage[t];
    }
    nlohmann::json summary = {
        {"J", result.value},
        {"denom", result.denom},
        {"tokens", batch.size()},
        {"advantage_summary",
         {{"min", adv_min},
          {"max", adv_max},
          {"mean", batch.size() ? adv_sum / static_cast<double>(batch.size())
                                : 0.0}}},
    };
    std::cout << summary.dump() << "\n";

    if (!g.output.empty()) {
      auto out = open_output(g.output);
      for (std::size_t t = 0; t < batch.size(); ++t) {
        nlohmann::json line = {
            {"traj", batch.keys[t].traj},
            {"j", batch.keys[t].round},
            {"pos", batch.keys[t].pos},
            {"term", result.per_token_terms[t]},
            {"mask", batch.loss_mask[t]},
        };
        out << line.dump() << '\n';
      }
    }
  } catch (const itrl::objective::EmptyEffectiveBatch& e) {
    std::cerr << "objective: " << e.what() << "\n";
    return kExitObjective;
  } catch (const itrl::policy::Misaligned& e) {
    std::cerr << "objective: " << e.what() << "\n";
    return kExitObjective;
  }
  return kExitOk;
}

int cmd_costmodel(const GlobalArgs& g, std::int64_t ell, std::int64_t m,
                  std::int64_t n, std::int64_t q) {
  const itrl::costmodel::CostParams params{ell, m, n, q};
  std::cout << "cost_ratio=" << itrl::costmodel::cost_ratio(params)
            << " iterative_cost=" << itrl::costmodel::iterative_cost(params)
            << " vanilla_cost=" << itrl::costmodel::vanilla_cost(n * ell)
            << "\n";
  if (!g.output.empty()) {
    auto out = open_output(g.output);
    out << "token_index,context_size,mode\n";
    const auto iterative = itrl::costmodel::sawtooth_trace(params);
    for (std::size_t i = 0; i < iterative.size(); ++i)
      out << i << ',' << iterative[i] << ",iterative\n";
    const auto vanilla = itrl::costmodel::vanilla_trace(q, n * ell);
    for (std::size_t i = 0; i < vanilla.size(); ++i)
      out << i << ',' << vanilla[i] << ",vanilla\n";
  }
  return kExitOk;
}

int cmd_report(const std::string& log_path) {
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open log: " + log_path);
  const auto parsed = itrl::log::read_log(in);
  const auto reports = itrl::log::aggregate_report(parsed);
  std::cout << "query_id\ttrajectories\tmean_tok\tmean_lat\tmean_turns\t"
               "turns_histogram\n";
  for (const auto& r : reports) {
    std::string hist;
    for (const auto& [turns, count] : r.turns_histogram) {
      if (!hist.empty()) hist += ' ';
      hist += std::to_string(turns) + ":" + std::to_string(count);
    }
    std::cout << r.query_id << '\t' << r.trajectories << '\t' << r.mean_tok
              << '\t' << r.mean_lat << '\t' << r.mean_turns << '\t' << hist
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterative-reasoning rollout, reward, and GRPO objective toolkit"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--seed", g.seed, "override config seed");
  app.add_option("--concurrency", g.concurrency, "override config concurrency");
  app.add_option("--output", g.output, "primary output path");

  std::string input, queries, log_path, logprobs, summarizer = "stub";
  std::int64_t ell = 1000, m = 100, n = 4, q = 0;

  auto* transform =
      app.add_subcommand("transform", "vanilla traces -> training instances");
  transform->add_option("--input", input, "JSONL {id, query, raw_response}")
      ->required();
  transform->add_option("--summarizer", summarizer, "stub | wire");

  auto* rollout = app.add_subcommand("rollout", "roll out trajectory groups");
  rollout->add_option("--queries", queries, "JSONL {id, query, answer}")
      ->required();
  rollout->add_option("--emit-logprobs", logprobs,
                      "write synthetic log-prob sidecar file");

  auto* objective =
      app.add_subcommand("objective", "objective value from a trajectory log");
  objective->add_option("--log", log_path, "trajectory log")->required();
  objective->add_option("--logprobs", logprobs, "log-prob sidecar file")
      ->required();

  auto* costmodel = app.add_subcommand("costmodel", "attention cost model");
  costmodel->add_option("--reasoning-tokens", ell, "reasoning tokens/iteration");
  costmodel->add_option("--summary-tokens", m, "summary tokens");
  costmodel->add_option("--iterations", n, "iteration count");
  costmodel->add_option("--query-tokens", q, "query tokens");

  auto* report = app.add_subcommand("report", "aggregate a trajectory log");
  report->add_option("--log", log_path, "trajectory log")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (transform->parsed()) return cmd_transform(g, input, summarizer);
    if (rollout->parsed()) return cmd_rollout(g, queries, logprobs);
    if (objective->parsed()) return cmd_objective(g, log_path, logprobs);
    if (costmodel->parsed()) return cmd_costmodel(g, ell, m, n, q);
    if (report->parsed()) return cmd_report(log_path);
  } catch (const itrl::config::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
