#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "ips/env.hpp"

namespace ips {

/// A controller driving one environment instance. Agents are stateful across
/// the steps of an episode; `clone` gives each evaluation worker its own copy.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  /// Called after `env.reset`; `seed` is the episode seed.
  virtual void begin_episode(const Env& env, std::uint64_t seed) = 0;
  virtual Action act(const Env& env) = 0;
  virtual std::unique_ptr<Agent> clone() const = 0;
};

/// Seen fraction of the ground-truth target voxels; 0 in scenes without a target.
/// Only the classical baselines use it, for their stop rule.
double seen_fraction(const Env& env, double det_threshold = 0.5);

}  // namespace ips
