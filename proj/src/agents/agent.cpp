#include "ips/agents/agent.hpp"

#include "ips/tsdf.hpp"

namespace ips {

double seen_fraction(const Env& env, double det_threshold) {
  const auto& truth = env.truth();
  if (!truth || truth->empty()) return 0.0;
  return target_seen_fraction(env.grid(), *truth, det_threshold);
}

}  // namespace ips
