#pragma once

#include <vector>

#include "ips/agents/agent.hpp"

namespace ips {

/// Open-path length visiting `nodes` in `tour` order.
double path_length(std::span<const Vec2> nodes, std::span<const int> tour);

/// Greedy open path from `start` (an index into `nodes`).
std::vector<int> nearest_neighbor_tour(std::span<const Vec2> nodes, int start);

/// 2-opt on an open path with the first node pinned: segment reversals are
/// applied while any shortens the path by more than a relative 1e-12.
std::vector<int> two_opt(std::span<const Vec2> nodes, std::vector<int> tour);

struct GesPlan {
  std::vector<Vec2> nodes;
  std::vector<int> route;  ///< visiting order (indices into nodes)
  std::size_t cursor = 0;  ///< next route entry to reach
  double sweep_height = 0.0;
  double spacing = 0.0;
};

/// Regular node lattice centered in the workspace (spacing apart, kept
/// `margin` away from the walls). The route starts at the node nearest `start`.
GesPlan ges_plan(double side_length, Vec2 start, double spacing, double sweep_height, double margin = 0.0);

struct GesConfig {
  double spacing = 0.06;
  /// Fingertip clearance above the lowest object top.
  double clearance = 0.005;
  double seen_done = 0.2;
  double det_threshold = 0.5;
  /// Consecutive steps without progress before a node is skipped.
  int stuck_limit = 3;
  friend bool operator==(const GesConfig&, const GesConfig&) = default;
};

/// Sweep height for the wrist so the fingertips clear the lowest object top.
double ges_sweep_height(const SceneState& scene, const GesConfig& cfg);

/// Next action for a plan: terminate when the target seen fraction exceeds the
/// threshold or the route is exhausted, else one clipped step toward the next
/// node at the sweep height. Advances the cursor over reached nodes.
Action ges_step(GesPlan& plan, double seen_fraction, const GripperState& gripper, const GesConfig& cfg);

class GesAgent final : public Agent {
 public:
  explicit GesAgent(GesConfig cfg = {}) : cfg_(cfg) {}
  std::string name() const override { return "ges"; }
  void begin_episode(const Env& env, std::uint64_t seed) override;
  Action act(const Env& env) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<GesAgent>(cfg_); }

  const GesPlan& plan() const { return plan_; }

 private:
  GesConfig cfg_;
  GesPlan plan_;
  double last_distance_ = 0.0;
  int stuck_ = 0;
  bool started_ = false;
};

}  // namespace ips
