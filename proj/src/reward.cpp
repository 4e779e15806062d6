#include "itrl/reward.hpp"

#include <cctype>
#include <chrono>
#include <future>
#include <thread>

namespace itrl::reward {

namespace {
std::string normalize_whitespace(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // swallow leading whitespace
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(c));
      in_space = false;
    }
  }
  return out;
}
}  // namespace

bool ExactMatchVerifier::verify(const std::string& final_output,
                                const std::string& ground_truth) {
  return normalize_whitespace(final_output) ==
         normalize_whitespace(ground_truth);
}

ScriptedVerifier::ScriptedVerifier(std::vector<Step> steps)
    : steps_(std::move(steps)) {}

bool ScriptedVerifier::verify(const std::string&, const std::string&) {
  const Step& step = steps_[cursor_ < steps_.size() ? cursor_ : steps_.size() - 1];
  if (cursor_ < steps_.size()) ++cursor_;
  if (step.delay_s > 0.0)
    std::this_thread::sleep_for(std::chrono::duration<double>(step.delay_s));
  return step.correct;
}

TaskRewardResult task_reward(const std::string& final_output,
                             const std::string& ground_truth, Verifier& v,
                             double timeout_s) {
  std::packaged_task<bool()> task(
      [&v, final_output, ground_truth]() {
        return v.verify(final_output, ground_truth);
      });
  auto future = task.get_future();
  std::thread runner(std::move(task));
  if (future.wait_for(std::chrono::duration<double>(timeout_s)) !=
      std::future_status::ready) {
    runner.detach();  // verifier keeps running; its result is discarded
    return {0.0, "timeout"};
  }
  runner.join();
  try {
    return {future.get() ? 1.0 : 0.0, ""};
  } catch (const std::exception&) {
    return {0.0, "verifier_error"};
  }
}

double efficiency_reward(int n, int phi) {
  if (n < 1 || n > phi)
    throw DomainError("efficiency_reward: need 1 <= n <= phi, got n=" +
                      std::to_string(n) + " phi=" + std::to_string(phi));
  const double x = static_cast<double>(n - 1) / static_cast<double>(phi);
  return 1.0 - x * x;
}

double combine(double task, double eff, bool use_efficiency) {
  return use_efficiency ? task * eff : task;
}

std::vector<std::vector<double>> broadcast(const RolloutGroup& group) {
  std::vector<std::vector<double>> table;
  table.reserve(group.trajectories.size());
  for (std::size_t i = 0; i < group.trajectories.size(); ++i)
    table.emplace_back(group.trajectories[i].records.size(), group.rewards[i]);
  return table;
}

}  // namespace itrl::reward
