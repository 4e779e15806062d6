#include "itrl/rollout.hpp"

#include <atomic>
#include <cctype>
#include <thread>

#include "itrl/prompt.hpp"
#include "itrl/reward.hpp"
#include "itrl/rng.hpp"

namespace itrl::rollout {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kSummaryOpen = "<summary>";
constexpr std::string_view kSummaryClose = "</summary>";

bool is_whitespace(std::string_view s) {
  for (unsigned char c : s)
    if (!std::isspace(c)) return false;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kConclusion: return "conclusion";
    case Termination::kFormatFailure: return "format_failure";
    case Termination::kIterationCap: return "iteration_cap";
  }
  return "unknown";
}

TokenSeq build_prompt(const std::string& query,
                      const std::optional<std::string>& prev_summary,
                      const Tokenizer& tok) {
  TokenSeq out = tok.encode(render_chat(query));
  if (prev_summary) {
    if (is_whitespace(*prev_summary))
      throw EmptySummary("build_prompt: previous summary is empty");
    TokenSeq hist = tok.encode(render_history(*prev_summary));
    out.insert(out.end(), hist.begin(), hist.end());
  }
  return out;
}

ParsedOutput extract_fields(const std::string& raw) {
  const std::string_view text(raw);
  const std::string_view head = trim(text);
  ParsedOutput failure;  // both fields empty, reasoning empty

  if (head.substr(0, kThinkOpen.size()) != kThinkOpen) return failure;
  const std::size_t think_start =
      static_cast<std::size_t>(head.data() - text.data()) + kThinkOpen.size();
  const std::size_t think_end = text.find(kThinkClose, think_start);
  if (think_end == std::string_view::npos) return failure;

  std::string_view reasoning = text.substr(think_start, think_end - think_start);
  if (!reasoning.empty() && reasoning.front() == '\n') reasoning.remove_prefix(1);
  if (!reasoning.empty() && reasoning.back() == '\n') reasoning.remove_suffix(1);

  const std::string_view post = text.substr(think_end + kThinkClose.size());
  const std::string_view trimmed = trim(post);

  ParsedOutput out;
  out.reasoning = std::string(reasoning);

  if (trimmed.size() >= kSummaryOpen.size() + kSummaryClose.size() &&
      trimmed.substr(0, kSummaryOpen.size()) == kSummaryOpen &&
      trimmed.substr(trimmed.size() - kSummaryClose.size()) == kSummaryClose) {
    const std::string_view inner = trimmed.substr(
        kSummaryOpen.size(),
        trimmed.size() - kSummaryOpen.size() - kSummaryClose.size());
    if (inner.find(kSummaryOpen) != std::string_view::npos ||
        inner.find(kSummaryClose) != std::string_view::npos)
      return failure;  // nested or duplicate summary tags
    out.summary = std::string(inner);
    return out;
  }

  // Anything else after the think block (including a summary block mixed
  // with extra text) is treated as the model answering.
  out.conclusion = std::string(post);
  return out;
}

Trajectory run_trajectory(const std::string& query_id, const std::string& query,
                          policy::Policy& pol, const RolloutConfig& cfg,
                          const Tokenizer& tok, int traj_index) {
  Trajectory traj;
  traj.query_id = query_id;
  traj.traj_index = traj_index;

  const std::uint64_t stream =
      mix_seed(fnv1a(query_id), static_cast<std::uint64_t>(traj_index));
  auto session = pol.start_session(stream);
  const policy::SamplingParams sampling{cfg.temperature, cfg.top_p};

  std::optional<std::string> prev_summary;
  for (int j = 1; j <= cfg.phi; ++j) {
    IterationRecord rec;
    rec.j = j;

    std::optional<std::string> injected;
    if (prev_summary) {
      TokenSeq ids = tok.encode(*prev_summary);
      if (static_cast<int>(ids.size()) > cfg.history_budget) {
        ids.resize(static_cast<std::size_t>(cfg.history_budget));
        injected = tok.decode(ids);
        rec.truncated_history = true;
      } else {
        injected = *prev_summary;
      }
      rec.history_summary = *injected;
    }

    const TokenSeq prompt_ids = build_prompt(query, injected, tok);
    rec.prompt_text = tok.decode(prompt_ids);
    rec.prompt_tokens = static_cast<std::int64_t>(prompt_ids.size());

    policy::Generation gen;
    try {
      gen = session->generate(rec.prompt_text, cfg.gen_budget, sampling);
    } catch (const policy::WireError& e) {
      traj.aborted = true;
      traj.abort_reason = e.what();
      return traj;
    }
    rec.raw_output = gen.text;
    rec.output_tokens = gen.token_count;
    rec.latency_s = gen.latency_s;
    rec.parsed = extract_fields(gen.text);

    const std::size_t hist_len =
        injected ? tok.count_tokens(*injected) : 0;
    rec.loss_mask.assign(hist_len, 0);
    rec.loss_mask.insert(rec.loss_mask.end(),
                         static_cast<std::size_t>(gen.token_count), 1);

    traj.records.push_back(std::move(rec));
    const ParsedOutput& parsed = traj.records.back().parsed;

    if (parsed.conclusion) {
      traj.termination = Termination::kConclusion;
      return traj;
    }
    if (!parsed.summary) {
      traj.termination = Termination::kFormatFailure;
      return traj;
    }
    if (j == cfg.phi) {
      traj.termination = Termination::kIterationCap;
      return traj;
    }
    prev_summary = parsed.summary;
  }
  return traj;  // unreachable: loop always terminates via one of the branches
}

reward::RolloutGroup run_group(const std::string& query_id,
                               const std::string& query, policy::Policy& pol,
                               const RolloutConfig& cfg, const Tokenizer& tok) {
  const int g = cfg.group_size;
  std::vector<Trajectory> slots(static_cast<std::size_t>(g));
  std::vector<std::string> errors(static_cast<std::size_t>(g));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= g) return;
      try {
        slots[static_cast<std::size_t>(i)] =
            run_trajectory(query_id, query, pol, cfg, tok, i);
      } catch (const std::exception& e) {
        slots[static_cast<std::size_t>(i)].aborted = true;
        slots[static_cast<std::size_t>(i)].abort_reason = e.what();
        slots[static_cast<std::size_t>(i)].traj_index = i;
        slots[static_cast<std::size_t>(i)].query_id = query_id;
      }
    }
  };

  const int workers = std::max(1, std::min(cfg.concurrency, g));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  reward::RolloutGroup group;
  group.query_id = query_id;
  for (auto& traj : slots) {
    if (traj.aborted)
      group.aborted.push_back(std::move(traj));
    else
      group.trajectories.push_back(std::move(traj));
  }
  if (group.trajectories.empty())
    throw PolicyUnavailable("run_group: all " + std::to_string(g) +
                            " trajectories aborted for query " + query_id);
  return group;
}

TrajectoryMetrics aggregate_metrics(const Trajectory& t) {
  TrajectoryMetrics m;
  m.num_turns = t.iteration_count();
  for (const auto& rec : t.records) {
    m.tok += rec.output_tokens;
    m.lat += rec.latency_s;
  }
  return m;
}

}  // namespace itrl::rollout
