// Exercises the installed command-line binary end to end via std::system.
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

fs::path temp_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "itrl-cli-tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path capture = temp_dir() / "capture.txt";
  const std::string cmd =
      std::string(ITRL_CLI_PATH) + " " + args + " > " + capture.string() +
      " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(raw);
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("--help prints usage and exits zero") {
  const auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("transform") != std::string::npos);
  CHECK(r.output.find("rollout") != std::string::npos);
}

TEST_CASE("missing config file exits 2 and names the path") {
  const auto queries = temp_dir() / "q.jsonl";
  write_file(queries, "{\"id\":\"q\",\"query\":\"x\",\"answer\":\"1\"}\n");
  const auto r = run_cli("--config /definitely/not/here.cfg --output " +
                         (temp_dir() / "o.log").string() +
                         " rollout --queries " + queries.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/definitely/not/here.cfg") != std::string::npos);
}

TEST_CASE("transform produces instance lines and discard counts") {
  const auto corpus = temp_dir() / "corpus.jsonl";
  std::ostringstream lines;
  for (int i = 0; i < 10; ++i)
    lines << "{\"id\":\"s" << i
          << "\",\"query\":\"add\",\"raw_response\":"
             "\"<think>\\nfirst step\\n\\nsecond step\\n</think>fin\"}\n";
  write_file(corpus, lines.str());
  const auto out = temp_dir() / "instances.jsonl";
  const auto r =
      run_cli("--output " + out.string() + " transform --input " +
              corpus.string());
  CHECK(r.exit_code == 0);
  int count = 0;
  std::istringstream produced(read_file(out));
  for (std::string line; std::getline(produced, line);)
    if (!line.empty()) ++count;
  CHECK(count >= 10);
}

TEST_CASE("transform reports oversize-paragraph discards") {
  const auto corpus = temp_dir() / "oversize.jsonl";
  const std::string big(7000, 'x');
  write_file(corpus,
             "{\"id\":\"s\",\"query\":\"q\",\"raw_response\":"
             "\"<think>\\n" + big + "\\n</think>fin\"}\n");
  const auto out = temp_dir() / "oversize-out.jsonl";
  const auto r = run_cli("--output " + out.string() + " transform --input " +
                         corpus.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("oversize_paragraph=1") != std::string::npos);
}

TEST_CASE("scripted rollout is deterministic across reruns") {
  const auto queries = temp_dir() / "scripted.jsonl";
  const std::string schedule =
      "[\"<think>\\ns\\n</think><summary>sum</summary>\","
      "\"<think>\\nd\\n</think>42\"]";
  write_file(queries,
             "{\"id\":\"a\",\"query\":\"one\",\"answer\":\"42\",\"schedule\":" +
                 schedule + "}\n" +
                 "{\"id\":\"b\",\"query\":\"two\",\"answer\":\"42\","
                 "\"schedule\":" + schedule + "}\n");
  const auto cfg = temp_dir() / "scripted.cfg";
  write_file(cfg, "policy=scripted\ngroup_size=2\n");
  const auto log1 = temp_dir() / "run1.log";
  const auto log2 = temp_dir() / "run2.log";
  const auto r1 = run_cli("--config " + cfg.string() + " --output " +
                          log1.string() + " rollout --queries " +
                          queries.string());
  const auto r2 = run_cli("--config " + cfg.string() + " --output " +
                          log2.string() + " rollout --queries " +
                          queries.string());
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  const std::string a = read_file(log1);
  CHECK(a == read_file(log2));
  // 2 queries x 2 trajectories x (2 iteration lines + 1 reward line)
  int lines = 0;
  std::istringstream in(a);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == 12);
}

TEST_CASE("unreachable wire endpoint exits 3") {
  const auto queries = temp_dir() / "wire.jsonl";
  write_file(queries, "{\"id\":\"q\",\"query\":\"x\",\"answer\":\"1\"}\n");
  const auto cfg = temp_dir() / "wire.cfg";
  // closed port; retries burn quickly against connection refused
  write_file(cfg,
             "policy=wire\nendpoint=http://127.0.0.1:9\ngroup_size=2\n");
  const auto r = run_cli("--config " + cfg.string() + " --output " +
                         (temp_dir() / "wire.log").string() +
                         " rollout --queries " + queries.string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("objective without reward lines exits 4") {
  const auto log = temp_dir() / "norewards.log";
  write_file(
      log,
      "{\"type\":\"iteration\",\"query_id\":\"q\",\"traj_index\":0,\"j\":1,"
      "\"prompt_tokens\":5,\"output_tokens\":3,\"latency_s\":0.0,"
      "\"summary_present\":false,\"truncated_history\":false,"
      "\"raw_output\":\"abc\",\"termination\":\"format_failure\"}\n");
  const auto lp = temp_dir() / "norewards.lp";
  write_file(lp,
             "{\"query_id\":\"q\",\"traj_index\":0,\"j\":1,"
             "\"logp_new\":[-1,-1,-1],\"logp_old\":[-1,-1,-1],"
             "\"logp_infer\":[-1,-1,-1]}\n");
  const auto r = run_cli("objective --log " + log.string() + " --logprobs " +
                         lp.string());
  CHECK(r.exit_code == 4);
  CHECK(r.output.find("rewards missing") != std::string::npos);
}

TEST_CASE("all-masked batches exit 4") {
  // a single round whose raw output is empty: no tokens at all
  const auto log = temp_dir() / "empty.log";
  write_file(
      log,
      "{\"type\":\"iteration\",\"query_id\":\"q\",\"traj_index\":0,\"j\":1,"
      "\"prompt_tokens\":5,\"output_tokens\":0,\"latency_s\":0.0,"
      "\"summary_present\":false,\"truncated_history\":false,"
      "\"raw_output\":\"\",\"termination\":\"format_failure\"}\n"
      "{\"type\":\"reward\",\"query_id\":\"q\",\"traj_index\":0,"
      "\"task_reward\":0.0,\"efficiency_reward\":1.0,\"combined\":0.0,"
      "\"cause\":\"\"}\n");
  const auto lp = temp_dir() / "empty.lp";
  write_file(lp, "");
  const auto r = run_cli("objective --log " + log.string() + " --logprobs " +
                         lp.string());
  CHECK(r.exit_code == 4);
}

TEST_CASE("rollout then objective computes a finite J") {
  const auto queries = temp_dir() / "sto.jsonl";
  write_file(queries, "{\"id\":\"q\",\"query\":\"x\",\"answer\":\"42\"}\n");
  const auto cfg = temp_dir() / "sto.cfg";
  write_file(cfg, "policy=stochastic\nseed=21\ngroup_size=8\n");
  const auto log = temp_dir() / "sto.log";
  const auto lp = temp_dir() / "sto.lp";
  const auto r1 = run_cli("--config " + cfg.string() + " --output " +
                          log.string() + " rollout --queries " +
                          queries.string() + " --emit-logprobs " +
                          lp.string());
  REQUIRE(r1.exit_code == 0);
  const auto terms = temp_dir() / "sto.terms";
  const auto r2 = run_cli("--config " + cfg.string() + " --output " +
                          terms.string() + " objective --log " + log.string() +
                          " --logprobs " + lp.string());
  CHECK(r2.exit_code == 0);
  CHECK(r2.output.find("\"J\":") != std::string::npos);
  CHECK(r2.output.find("\"denom\":") != std::string::npos);
  CHECK(!read_file(terms).empty());
}

TEST_CASE("costmodel prints the closed-form ratio") {
  const auto r = run_cli(
      "costmodel --reasoning-tokens 1000 --summary-tokens 100 --iterations 4 "
      "--query-tokens 0");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("cost_ratio=0.36") != std::string::npos);
}

TEST_CASE("report matches the scripted schedule histogram") {
  const auto queries = temp_dir() / "hist.jsonl";
  const std::string schedule =
      "[\"<think>\\ns\\n</think><summary>sum</summary>\","
      "\"<think>\\nd\\n</think>42\"]";
  write_file(queries,
             "{\"id\":\"h\",\"query\":\"one\",\"answer\":\"42\","
             "\"schedule\":" + schedule + "}\n");
  const auto cfg = temp_dir() / "hist.cfg";
  write_file(cfg, "policy=scripted\ngroup_size=3\n");
  const auto log = temp_dir() / "hist.log";
  REQUIRE(run_cli("--config " + cfg.string() + " --output " + log.string() +
                  " rollout --queries " + queries.string())
              .exit_code == 0);
  const auto r = run_cli("report --log " + log.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("2:3") != std::string::npos);  // all three took 2 turns
}

TEST_CASE("report on an empty log exits 0 with only the header") {
  const auto log = temp_dir() / "empty-report.log";
  write_file(log, "");
  const auto r = run_cli("report --log " + log.string());
  CHECK(r.exit_code == 0);
  int lines = 0;
  std::istringstream in(r.output);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++lines;
  CHECK(lines == 1);
}
