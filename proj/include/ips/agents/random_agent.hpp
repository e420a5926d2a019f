#pragma once

#include "ips/agents/agent.hpp"

namespace ips {

/// Uniform continuous actions within the motion limits; terminates with a fixed probability per step.
class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(double terminate_probability = 0.5) : p_terminate_(terminate_probability) {}
  std::string name() const override { return "random"; }
  void begin_episode(const Env& env, std::uint64_t seed) override;
  Action act(const Env& env) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<RandomAgent>(p_terminate_); }

 private:
  double p_terminate_;
  Rng rng_{0};
};

}  // namespace ips
