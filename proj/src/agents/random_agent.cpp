#include "ips/agents/random_agent.hpp"

#include <algorithm>
#include <cmath>

namespace ips {

void RandomAgent::begin_episode(const Env&, std::uint64_t seed) { rng_ = Rng(derive_seed(seed, 4)); }

Action RandomAgent::act(const Env&) {
  const double t = kMotionLimits.max_translation, r = kMotionLimits.max_rotation;
  Action a;
  a.dx = rng_.uniform(-t, t);
  a.dy = rng_.uniform(-t, t);
  a.dz = rng_.uniform(-t, t);
  a.droll = rng_.uniform(-r, r);
  a.dyaw = rng_.uniform(-r, r);
  a.terminate = rng_.bernoulli(p_terminate_);
  return a;
}

}  // namespace ips
