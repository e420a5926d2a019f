#include <doctest.h>

#include <cmath>
#include <cstring>

#include "ips/agents/gnbv.hpp"
#include "ips/agents/random_agent.hpp"
#include "ips/env.hpp"
#include "ips/harness/config.hpp"
#include "ips/simd/kernels.hpp"

using namespace ips;

namespace {

EpisodeConfig smoke() { return preset("smoke"); }

bool same_bits(const StateVector& a, const StateVector& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("step reward examples") {
  CHECK(step_reward(0, 100.0, 1.0) == -1.0);
  CHECK(step_reward(100, 100.0, 1.0) == 0.0);
  CHECK(step_reward(50, 100.0, 1.0) == -0.5);
  CHECK(step_reward(1000, 100.0, 1.0) == 0.0);
  CHECK(step_reward(25, 100.0, 2.0) == -1.5);
  CHECK_THROWS_AS(step_reward(1, 0.0, 1.0), ContractViolation);
}

TEST_CASE("actions are clipped to the motion limits") {
  Action a;
  a.dx = 0.5;
  a.dy = -0.5;
  a.dz = std::nan("");
  a.droll = 1.0;
  a.dyaw = -0.01;
  const Action c = clip_action(a);
  CHECK(c.dx == 0.06);
  CHECK(c.dy == -0.06);
  CHECK(c.dz == 0.0);
  CHECK(c.droll == 0.15);
  CHECK(c.dyaw == -0.01);
}

TEST_CASE("reset is deterministic per seed") {
  Env a, b;
  const StateVector sa = a.reset(smoke(), 12), sb = b.reset(smoke(), 12);
  CHECK(same_bits(sa, sb));
  CHECK(a.scene() == b.scene());
  CHECK(a.rng_cursor() == b.rng_cursor());
  CHECK(a.kappa() > 1.0);
  Env c;
  c.reset(smoke(), 13);
  CHECK_FALSE(c.scene() == a.scene());
  for (double x : sa) CHECK(std::isfinite(x));

  EpisodeConfig fixed = smoke();
  fixed.reward.kappa = 42.0;
  c.reset(fixed, 1);
  CHECK(c.kappa() == 42.0);
  CHECK(calibrate_kappa(smoke()) == doctest::Approx(a.kappa()));
}

TEST_CASE("terminating without a target succeeds") {
  EpisodeConfig cfg = smoke();
  cfg.scene.no_target_probability = 1.0;
  Env env;
  env.reset(cfg, 3);
  REQUIRE_FALSE(env.truth());
  const StepResult r = env.step(Action::stop());
  CHECK(r.done);
  CHECK(r.outcome == Outcome::SuccessNoTarget);
  CHECK(r.reward == 150.0);
  CHECK_THROWS_AS(env.step(Action{}), ContractViolation);
}

TEST_CASE("terminating before the target is seen fails") {
  EpisodeConfig cfg = smoke();
  cfg.scene.no_target_probability = 0.0;
  Env env;
  for (std::uint64_t seed = 0;; ++seed) {
    env.reset(cfg, seed);
    if (target_seen_fraction(env.grid(), *env.truth()) < 0.2) break;
  }
  const StepResult r = env.step(Action::stop());
  CHECK(r.outcome == Outcome::FailureFalseTerminate);
  CHECK(r.reward == -150.0);
}

TEST_CASE("terminating after the target is seen succeeds") {
  EpisodeConfig cfg = smoke();
  cfg.scene.no_target_probability = 0.0;
  Env env;
  GnbvAgent agent;
  int found = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    env.reset(cfg, seed);
    agent.begin_episode(env, seed);
    while (!env.done() && target_seen_fraction(env.grid(), *env.truth()) < 0.2) {
      Action a = agent.act(env);
      a.terminate = false;
      env.step(a);
    }
    if (env.done()) continue;
    const StepResult r = env.step(Action::stop());
    CHECK(r.outcome == Outcome::SuccessFound);
    CHECK(r.reward == 150.0);
    ++found;
  }
  CHECK(found >= 4);
}

TEST_CASE("the horizon ends an episode with the failure reward") {
  EpisodeConfig cfg = smoke();
  cfg.horizon = 3;
  Env env;
  env.reset(cfg, 5);
  CHECK(env.step(Action{}).outcome == Outcome::Running);
  CHECK(env.step(Action{}).outcome == Outcome::Running);
  const StepResult r = env.step(Action{});
  CHECK(r.outcome == Outcome::FailureTimeout);
  CHECK(r.reward == -150.0);
  CHECK(env.steps() == 3);
}

TEST_CASE("translations are applied in the yaw frame") {
  EpisodeConfig cfg = smoke();
  cfg.scene.min_objects = cfg.scene.max_objects = 0;
  Env env;
  env.reset(cfg, 9);
  const GripperState g0 = env.scene().gripper;
  Action a;
  a.dx = 0.01;
  env.step(a);
  const GripperState g1 = env.scene().gripper;
  CHECK(g1.position.x - g0.position.x == doctest::Approx(0.01 * std::cos(g0.yaw)).epsilon(1e-9));
  CHECK(g1.position.y - g0.position.y == doctest::Approx(0.01 * std::sin(g0.yaw)).epsilon(1e-9));
}

TEST_CASE("step rewards stay in bounds and positive returns mean success") {
  const EpisodeConfig cfg = smoke();
  Env env;
  RandomAgent agent(0.2);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    env.reset(cfg, seed);
    agent.begin_episode(env, seed);
    double ret = 0.0;
    StepResult r;
    while (!env.done()) {
      r = env.step(agent.act(env));
      if (!r.done) {
        CHECK(r.reward >= -1.0);
        CHECK(r.reward <= 0.0);
      } else {
        CHECK(std::abs(r.reward) == 150.0);
      }
      ret += r.reward;
    }
    if (ret > 0.0) CHECK(is_success(r.outcome));
  }
}

TEST_CASE("observations are identical with scalar and vectorized kernels") {
  if (simd::avx2_kernels() == nullptr) return;
  const EpisodeConfig cfg = smoke();
  std::vector<StateVector> runs[2];
  for (int pass = 0; pass < 2; ++pass) {
    simd::select(pass == 0 ? simd::Isa::Scalar : simd::Isa::Avx2);
    Env env;
    RandomAgent agent(0.05);
    runs[pass].push_back(env.reset(cfg, 77));
    agent.begin_episode(env, 77);
    while (!env.done()) runs[pass].push_back(env.step(agent.act(env)).observation);
  }
  simd::select(simd::detect_best());
  REQUIRE(runs[0].size() == runs[1].size());
  for (std::size_t i = 0; i < runs[0].size(); ++i) CHECK(same_bits(runs[0][i], runs[1][i]));
}

TEST_CASE("outcome and task names round-trip") {
  for (Outcome o : {Outcome::Running, Outcome::SuccessFound, Outcome::SuccessNoTarget, Outcome::FailureFalseTerminate,
                    Outcome::FailureTimeout})
    CHECK(outcome_from_string(to_string(o)) == o);
  CHECK(task_from_string("interactive") == Task::Interactive);
  CHECK_THROWS(outcome_from_string("won"));
}
