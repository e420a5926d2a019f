#include "ips/agents/gnbv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ips {

void GnbvConfig::validate() const {
  if (samples < 1) throw ContractViolation("gnbv needs at least one sample");
  if (!(explore_done > 0.0 && explore_done < 1.0) || !(seen_done > 0.0 && seen_done < 1.0))
    throw ContractViolation("gnbv thresholds must be in (0, 1)");
  if (!(radius > 0.0) || angle_range < 0.0 || !(crop_side > 0.0)) throw ContractViolation("invalid gnbv sampling");
}

bool VisibilityRegion::contains(const Vec3& p) const {
  const double dx = p.x - center.x, dy = p.y - center.y;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * side && std::abs(ly) <= 0.5 * side;
}

namespace {

/// Per-axis traversal state: index, step direction, and the parameter at
/// which the ray leaves the current slab along this axis.
struct Axis {
  int index = 0;
  int step = 0;
  double exit = std::numeric_limits<double>::infinity();
};

double slab_time(double boundary, double origin, double dir) { return (boundary - origin) / dir; }

}  // namespace

std::size_t VisibilityScorer::score(const VoxelGrid& grid, const GripperState& pose,
                                    const CameraIntrinsics& intrinsics, const VisibilityRegion* region) {
  const GridGeometry& geo = grid.geometry();
  if (stamp_.size() != geo.size()) {
    stamp_.assign(geo.size(), 0);
    epoch_ = 0;
  }
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0);
    epoch_ = 1;
  }
  const RigidTransform cam = camera_to_world(pose, intrinsics);
  const Vec3 o = cam.translation;
  const double v = geo.voxel_size;
  const int dims[3] = {geo.nx, geo.ny, geo.nz};
  const double far = intrinsics.far_clip;
  const auto weight = grid.weight();
  const auto tsdf = grid.tsdf();

  std::size_t gain = 0;
  for (int py = 0; py < intrinsics.height; ++py) {
    for (int px = 0; px < intrinsics.width; ++px) {
      const Vec3 d = cam.rotation * camera_ray(intrinsics, px + 0.5, py + 0.5);
      const double oc[3] = {o.x, o.y, o.z}, dc[3] = {d.x, d.y, d.z};

      // Clip against the grid box.
      double t0 = 0.0, t1 = far;
      bool miss = false;
      for (int a = 0; a < 3 && !miss; ++a) {
        const double hi = dims[a] * v;
        if (dc[a] == 0.0) {
          miss = oc[a] < 0.0 || oc[a] >= hi;
        } else {
          double ta = slab_time(0.0, oc[a], dc[a]), tb = slab_time(hi, oc[a], dc[a]);
          if (ta > tb) std::swap(ta, tb);
          t0 = std::max(t0, ta);
          t1 = std::min(t1, tb);
        }
      }
      if (miss || !(t0 < t1)) continue;

      Axis ax[3];
      for (int a = 0; a < 3; ++a) {
        if (dc[a] == 0.0) {
          ax[a].index = static_cast<int>(std::floor(oc[a] / v));
          continue;
        }
        ax[a].step = dc[a] > 0.0 ? 1 : -1;
        int i = std::clamp(static_cast<int>(std::floor((oc[a] + t0 * dc[a]) / v)), 0, dims[a] - 1);
        // Settle on the slab whose open interval contains t0, using the same
        // boundary times as the per-voxel test.
        auto exit_of = [&](int k) { return slab_time((dc[a] > 0.0 ? k + 1 : k) * v, oc[a], dc[a]); };
        auto entry_of = [&](int k) { return slab_time((dc[a] > 0.0 ? k : k + 1) * v, oc[a], dc[a]); };
        while (i + ax[a].step >= 0 && i + ax[a].step < dims[a] && exit_of(i) <= t0) i += ax[a].step;
        while (i - ax[a].step >= 0 && i - ax[a].step < dims[a] && entry_of(i) > t0) i -= ax[a].step;
        ax[a].index = i;
        ax[a].exit = exit_of(i);
      }

      double t = t0;
      while (t < t1) {
        const double next = std::min({ax[0].exit, ax[1].exit, ax[2].exit, t1});
        if (next > t) {
          const std::size_t lin = geo.linear(ax[0].index, ax[1].index, ax[2].index);
          if (weight[lin] > 0.0f && tsdf[lin] < 0.0f) break;
          if (weight[lin] == 0.0f && stamp_[lin] != epoch_ &&
              (region == nullptr || region->contains(geo.center(ax[0].index, ax[1].index, ax[2].index)))) {
            stamp_[lin] = epoch_;
            ++gain;
          }
        }
        if (next >= t1) break;
        bool inside = true;
        for (int k = 0; k < 3; ++k) {
          Axis& a = ax[k];
          if (a.exit != next) continue;
          a.index += a.step;
          if (a.index < 0 || a.index >= dims[k]) inside = false;
          a.exit = slab_time((a.step > 0 ? a.index + 1 : a.index) * v, oc[k], dc[k]);
        }
        if (!inside) break;
        t = next;
      }
    }
  }
  return gain;
}

std::size_t score_candidate(const VoxelGrid& grid, const GripperState& pose, const CameraIntrinsics& intrinsics,
                            const VisibilityRegion* region) {
  VisibilityScorer scorer;
  return scorer.score(grid, pose, intrinsics, region);
}

std::vector<GripperState> sample_candidates(const GripperState& current, const SceneConfig& scene,
                                            const GnbvConfig& cfg, Rng& rng) {
  const double side = scene.workspace.side_length;
  const double margin = 0.5 * std::hypot(scene.gripper.collider.x, scene.gripper.collider.y);
  const double zlo = min_gripper_height(scene), zhi = max_gripper_height(scene);
  std::vector<GripperState> out;
  out.reserve(static_cast<std::size_t>(cfg.samples));
  for (int i = 0; i < cfg.samples; ++i) {
    Vec3 off;
    do {
      off = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    } while (dot(off, off) > 1.0);
    GripperState c;
    c.position = {std::clamp(current.position.x + cfg.radius * off.x, margin, side - margin),
                  std::clamp(current.position.y + cfg.radius * off.y, margin, side - margin),
                  std::clamp(current.position.z + cfg.radius * off.z, zlo, zhi)};
    c.roll = std::clamp(current.roll + rng.uniform(-cfg.angle_range, cfg.angle_range), -scene.gripper.roll_limit,
                        scene.gripper.roll_limit);
    c.yaw = wrap_angle(current.yaw + rng.uniform(-cfg.angle_range, cfg.angle_range));
    out.push_back(c);
  }
  return out;
}

Action step_toward(const GripperState& from, const GripperState& to) {
  const double dx = to.position.x - from.position.x, dy = to.position.y - from.position.y;
  const double c = std::cos(from.yaw), s = std::sin(from.yaw);
  Action a;
  a.dx = c * dx + s * dy;
  a.dy = -s * dx + c * dy;
  a.dz = to.position.z - from.position.z;
  a.droll = to.roll - from.roll;
  a.dyaw = wrap_angle(to.yaw - from.yaw);
  return clip_action(a);
}

std::optional<Vec3> detection_centroid(const VoxelGrid& grid, double det_threshold) {
  const GridGeometry& geo = grid.geometry();
  const auto det = grid.det();
  Vec3 sum;
  std::size_t n = 0;
  for (int x = 0; x < geo.nx; ++x)
    for (int y = 0; y < geo.ny; ++y)
      for (int z = 0; z < geo.nz; ++z)
        if (det[geo.linear(x, y, z)] >= det_threshold) {
          sum = sum + geo.center(x, y, z);
          ++n;
        }
  if (n == 0) return std::nullopt;
  return sum * (1.0 / static_cast<double>(n));
}

double viewing_angle(const GripperState& pose, const CameraIntrinsics& intrinsics, const Vec3& point) {
  const RigidTransform cam = camera_to_world(pose, intrinsics);
  const Vec3 axis = cam.rotation.column(2);
  const Vec3 to = point - cam.translation;
  const double n = norm(to);
  if (n == 0.0) return 0.0;
  return std::acos(std::clamp(dot(axis, to) / n, -1.0, 1.0));
}

GnbvAgent::GnbvAgent(GnbvConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void GnbvAgent::begin_episode(const Env&, std::uint64_t seed) {
  rng_ = Rng(derive_seed(seed, 5));
  goal_.reset();
  goal_from_detection_ = false;
}

namespace {

bool same_pose(const GripperState& a, const GripperState& b, double tol) {
  return norm(a.position - b.position) <= tol && std::abs(a.roll - b.roll) <= tol &&
         std::abs(wrap_angle(a.yaw - b.yaw)) <= tol;
}

}  // namespace

Action GnbvAgent::act(const Env& env) {
  const VoxelGrid& grid = env.grid();
  const GripperState& g = env.scene().gripper;
  if (observed_fraction(grid) > cfg_.explore_done) return Action::stop();
  if (seen_fraction(env, cfg_.det_threshold) > cfg_.seen_done) return Action::stop();

  const std::optional<Vec3> centroid = detection_centroid(grid, cfg_.det_threshold);
  const bool replan = !goal_ || same_pose(g, *goal_, 1e-4) || same_pose(g, last_, 1e-9) ||
                      centroid.has_value() != goal_from_detection_;
  if (replan) {
    const auto candidates = sample_candidates(g, env.config().scene, cfg_, rng_);
    std::size_t best = 0;
    if (centroid) {
      double best_angle = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double a = viewing_angle(candidates[i], env.config().camera, *centroid);
        if (a < best_angle) {
          best_angle = a;
          best = i;
        }
      }
    } else {
      const VisibilityRegion region{g.position.xy(), g.yaw, cfg_.crop_side};
      std::size_t best_gain = 0;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::size_t gain = scorer_.score(grid, candidates[i], env.config().camera, &region);
        if (i == 0 || gain > best_gain) {
          best_gain = gain;
          best = i;
        }
      }
    }
    goal_ = candidates[best];
    goal_from_detection_ = centroid.has_value();
  }
  last_ = g;
  return step_toward(g, *goal_);
}

}  // namespace ips
