#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "itrl/rollout.hpp"

namespace itrl::reward {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual bool verify(const std::string& final_output,
                      const std::string& ground_truth) = 0;
};

/// Whitespace-normalized exact match (runs of whitespace collapse to one
/// space, leading/trailing stripped).
class ExactMatchVerifier final : public Verifier {
 public:
  bool verify(const std::string& final_output,
              const std::string& ground_truth) override;
};

/// Programmable correctness schedule for pipeline tests; optional per-call
/// delay exercises the timeout path.
class ScriptedVerifier final : public Verifier {
 public:
  struct Step {
    bool correct = false;
    double delay_s = 0.0;
  };
  explicit ScriptedVerifier(std::vector<Step> steps);
  bool verify(const std::string& final_output,
              const std::string& ground_truth) override;

 private:
  std::vector<Step> steps_;
  std::size_t cursor_ = 0;
};

struct TaskRewardResult {
  double value = 0.0;
  std::string cause;  // "", "timeout", "verifier_error"
};

/// 1.0 iff the verifier reports Correct within timeout_s; timeouts and
/// verifier failures map to 0.0 with a recorded cause.
TaskRewardResult task_reward(const std::string& final_output,
                             const std::string& ground_truth, Verifier& v,
                             double timeout_s = 10.0);

/// 1 - ((n - 1) / phi)^2; throws DomainError unless 1 <= n <= phi.
double efficiency_reward(int n, int phi);

/// task * eff when use_efficiency is set, task otherwise.
double combine(double task, double eff, bool use_efficiency);

/// G trajectories for one query; the GRPO normalization scope.
struct RolloutGroup {
  std::string query_id;
  std::vector<rollout::Trajectory> trajectories;  // completed, order-stable
  std::vector<rollout::Trajectory> aborted;       // reported, not scored
  std::vector<double> rewards;     // per completed trajectory, in [0, 1]
  std::vector<double> advantages;  // filled by the objective stage
};

/// Per-round reward table: every round of trajectory i carries rewards[i].
std::vector<std::vector<double>> broadcast(const RolloutGroup& group);

}  // namespace itrl::reward
