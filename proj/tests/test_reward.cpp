#include <doctest.h>

#include <chrono>
#include <cmath>

#include "itrl/reward.hpp"
#include "itrl/rollout.hpp"

using namespace itrl::reward;

namespace {
itrl::rollout::Trajectory make_traj(int rounds) {
  itrl::rollout::Trajectory t;
  for (int j = 1; j <= rounds; ++j) {
    itrl::rollout::IterationRecord rec;
    rec.j = j;
    rec.raw_output = "<think>\nr\n</think>42";
    t.records.push_back(rec);
  }
  return t;
}

struct ThrowingVerifier final : Verifier {
  bool verify(const std::string&, const std::string&) override {
    throw std::runtime_error("verifier crashed");
  }
};
}  // namespace

TEST_CASE("exact match normalizes whitespace") {
  ExactMatchVerifier v;
  CHECK(task_reward("42", "42", v).value == 1.0);
  CHECK(task_reward("41", "42", v).value == 0.0);
  CHECK(task_reward("  42 \n", "42", v).value == 1.0);
  CHECK(task_reward("the  answer", "the answer", v).value == 1.0);
}

TEST_CASE("slow verifiers time out to zero") {
  ScriptedVerifier v({{true, 0.5}});
  const auto start = std::chrono::steady_clock::now();
  const auto r = task_reward("42", "42", v, 0.05);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  CHECK(r.value == 0.0);
  CHECK(r.cause == "timeout");
  CHECK(elapsed < 0.4);  // did not block for the verifier's full delay
}

TEST_CASE("verifier exceptions map to zero with a cause") {
  ThrowingVerifier v;
  const auto r = task_reward("42", "42", v);
  CHECK(r.value == 0.0);
  CHECK(r.cause == "verifier_error");
}

TEST_CASE("scripted verifier follows its schedule") {
  ScriptedVerifier v({{true, 0.0}, {false, 0.0}, {true, 0.0}});
  CHECK(task_reward("x", "y", v).value == 1.0);
  CHECK(task_reward("x", "y", v).value == 0.0);
  CHECK(task_reward("x", "y", v).value == 1.0);
}

TEST_CASE("efficiency reward decays quadratically") {
  CHECK(efficiency_reward(1, 5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(efficiency_reward(5, 5) == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(efficiency_reward(3, 5) == doctest::Approx(0.84).epsilon(1e-12));
}

TEST_CASE("efficiency reward rejects out-of-domain n") {
  CHECK_THROWS_AS((void)efficiency_reward(0, 5), DomainError);
  CHECK_THROWS_AS((void)efficiency_reward(6, 5), DomainError);
  CHECK_THROWS_AS((void)efficiency_reward(1, 0), DomainError);
}

TEST_CASE("efficiency reward decreases in n for every phi") {
  for (int phi = 2; phi <= 10; ++phi) {
    double prev = 2.0;
    for (int n = 1; n <= phi; ++n) {
      const double r = efficiency_reward(n, phi);
      CHECK(r < prev);
      CHECK(r > 0.0);
      prev = r;
    }
  }
}

TEST_CASE("combine multiplies only when the flag is on") {
  CHECK(combine(1.0, 0.84, true) == doctest::Approx(0.84));
  CHECK(combine(0.0, 0.36, true) == 0.0);
  CHECK(combine(1.0, 0.36, false) == 1.0);
}

TEST_CASE("broadcast shares the trajectory reward across rounds") {
  RolloutGroup g;
  g.trajectories.push_back(make_traj(3));
  g.rewards = {0.84};
  const auto t = broadcast(g);
  REQUIRE(t.size() == 1);
  CHECK(t[0] == std::vector<double>{0.84, 0.84, 0.84});
}

TEST_CASE("broadcast handles singleton and mixed groups") {
  RolloutGroup g;
  g.trajectories.push_back(make_traj(1));
  g.rewards = {0.5};
  const auto t = broadcast(g);
  REQUIRE(t.size() == 1);
  CHECK(t[0] == std::vector<double>{0.5});

  RolloutGroup g2;
  g2.trajectories.push_back(make_traj(2));
  g2.trajectories.push_back(make_traj(3));
  g2.rewards = {1.0, 0.0};
  const auto t2 = broadcast(g2);
  REQUIRE(t2.size() == 2);
  CHECK(t2[0] == std::vector<double>{1.0, 1.0});
  CHECK(t2[1] == std::vector<double>{0.0, 0.0, 0.0});
  std::size_t entries = t2[0].size() + t2[1].size();
  CHECK(entries == 5);
}
