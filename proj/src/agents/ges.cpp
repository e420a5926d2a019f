#include "ips/agents/ges.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ips/agents/gnbv.hpp"

namespace ips {

double path_length(std::span<const Vec2> nodes, std::span<const int> tour) {
  double len = 0.0;
  for (std::size_t i = 1; i < tour.size(); ++i) len += norm(nodes[tour[i]] - nodes[tour[i - 1]]);
  return len;
}

std::vector<int> nearest_neighbor_tour(std::span<const Vec2> nodes, int start) {
  const int n = static_cast<int>(nodes.size());
  if (n == 0) return {};
  if (start < 0 || start >= n) throw ContractViolation("tour start out of range");
  std::vector<int> tour{start};
  std::vector<bool> used(nodes.size(), false);
  used[start] = true;
  for (int k = 1; k < n; ++k) {
    const Vec2 here = nodes[tour.back()];
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = norm(nodes[j] - here);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    tour.push_back(best);
  }
  return tour;
}

std::vector<int> two_opt(std::span<const Vec2> nodes, std::vector<int> tour) {
  const std::size_t n = tour.size();
  {
    std::vector<bool> seen(nodes.size(), false);
    if (n != nodes.size()) throw ContractViolation("tour must be a permutation of the nodes");
    for (int t : tour) {
      if (t < 0 || static_cast<std::size_t>(t) >= nodes.size() || seen[t])
        throw ContractViolation("tour must be a permutation of the nodes");
      seen[t] = true;
    }
  }
  if (n < 3) return tour;
  auto dist = [&](std::size_t a, std::size_t b) { return norm(nodes[tour[a]] - nodes[tour[b]]); };
  const double eps = 1e-12 * std::max(1.0, path_length(nodes, tour));
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        // Reverse tour[i..j]: edges (i-1, i) and (j, j+1) become (i-1, j) and (i, j+1).
        double delta = dist(i - 1, j) - dist(i - 1, i);
        if (j + 1 < n) delta += dist(i, j + 1) - dist(j, j + 1);
        if (delta < -eps) {
          std::reverse(tour.begin() + static_cast<std::ptrdiff_t>(i),
                       tour.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          improved = true;
        }
      }
    }
  }
  return tour;
}

GesPlan ges_plan(double side_length, Vec2 start, double spacing, double sweep_height, double margin) {
  if (!(spacing > 0.0) || spacing > kMotionLimits.max_translation + 1e-12)
    throw ContractViolation("node spacing must be positive and at most one step");
  const double usable = side_length - 2.0 * margin;
  if (usable < 0.0) throw ContractViolation("margin leaves no room for nodes");
  const int count = static_cast<int>(std::floor(usable / spacing + 1e-9)) + 1;
  const double first = 0.5 * side_length - 0.5 * (count - 1) * spacing;
  GesPlan plan;
  plan.spacing = spacing;
  plan.sweep_height = sweep_height;
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) plan.nodes.push_back({first + i * spacing, first + j * spacing});
  int nearest = 0;
  for (std::size_t k = 1; k < plan.nodes.size(); ++k)
    if (norm(plan.nodes[k] - start) < norm(plan.nodes[nearest] - start)) nearest = static_cast<int>(k);
  plan.route = two_opt(plan.nodes, nearest_neighbor_tour(plan.nodes, nearest));
  return plan;
}

double ges_sweep_height(const SceneState& scene, const GesConfig& cfg) {
  double lowest = 0.0;
  if (!scene.objects.empty()) {
    lowest = std::numeric_limits<double>::infinity();
    for (const ObjectInstance& o : scene.objects) lowest = std::min(lowest, o.top());
  }
  const double z = lowest + cfg.clearance + scene.config.gripper.collider.z;
  return std::clamp(z, min_gripper_height(scene.config), max_gripper_height(scene.config));
}

namespace {

constexpr double kReachTolerance = 1e-4;

}  // namespace

Action ges_step(GesPlan& plan, double seen_fraction, const GripperState& gripper, const GesConfig& cfg) {
  if (seen_fraction > cfg.seen_done) return Action::stop();
  while (plan.cursor < plan.route.size() &&
         norm(plan.nodes[plan.route[plan.cursor]] - gripper.position.xy()) <= kReachTolerance)
    ++plan.cursor;
  if (plan.cursor >= plan.route.size()) return Action::stop();
  const Vec2 node = plan.nodes[plan.route[plan.cursor]];
  GripperState goal = gripper;
  goal.position = {node.x, node.y, plan.sweep_height};
  goal.roll = 0.0;
  return step_toward(gripper, goal);
}

void GesAgent::begin_episode(const Env& env, std::uint64_t) {
  const SceneState& scene = env.scene();
  const double margin = 0.5 * std::hypot(scene.config.gripper.collider.x, scene.config.gripper.collider.y);
  plan_ = ges_plan(scene.config.workspace.side_length, scene.gripper.position.xy(), cfg_.spacing,
                   ges_sweep_height(scene, cfg_), margin);
  stuck_ = 0;
  started_ = false;
}

Action GesAgent::act(const Env& env) {
  const GripperState& g = env.scene().gripper;
  if (started_ && plan_.cursor < plan_.route.size()) {
    const double d = norm(plan_.nodes[plan_.route[plan_.cursor]] - g.position.xy()) +
                     std::abs(g.position.z - plan_.sweep_height);
    if (d < last_distance_ - kReachTolerance) {
      stuck_ = 0;
    } else if (++stuck_ >= cfg_.stuck_limit) {
      ++plan_.cursor;
      stuck_ = 0;
    }
  }
  const Action a = ges_step(plan_, seen_fraction(env, cfg_.det_threshold), g, cfg_);
  started_ = true;
  if (plan_.cursor < plan_.route.size())
    last_distance_ = norm(plan_.nodes[plan_.route[plan_.cursor]] - g.position.xy()) +
                     std::abs(g.position.z - plan_.sweep_height);
  return a;
}

}  // namespace ips
