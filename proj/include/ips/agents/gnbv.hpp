#pragma once

#include <optional>
#include <vector>

#include "ips/agents/agent.hpp"

namespace ips {

struct GnbvConfig {
  int samples = 10;
  double radius = 0.18;       ///< position sampling ball
  double angle_range = 0.45;  ///< uniform roll / yaw perturbation half-width
  double explore_done = 0.97;
  double seen_done = 0.2;
  double det_threshold = 0.5;
  /// Restrict gains to the square crop around the current gripper (the map extent the policy sees).
  double crop_side = 1.2;

  void validate() const;
  friend bool operator==(const GnbvConfig&, const GnbvConfig&) = default;
};

/// Square in the yaw-projected frame of a gripper pose.
struct VisibilityRegion {
  Vec2 center;
  double yaw = 0.0;
  double side = 0.0;
  bool contains(const Vec3& p) const;
};

/// Counts distinct unobserved voxels pierced by the camera's pixel rays before
/// each ray meets a known-occupied voxel. Unobserved space is treated as free.
/// Rays stop at the far clip; voxels outside `region` (when given) are not counted.
class VisibilityScorer {
 public:
  std::size_t score(const VoxelGrid& grid, const GripperState& pose, const CameraIntrinsics& intrinsics,
                    const VisibilityRegion* region = nullptr);

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

std::size_t score_candidate(const VoxelGrid& grid, const GripperState& pose, const CameraIntrinsics& intrinsics,
                            const VisibilityRegion* region = nullptr);

/// Poses sampled around `current` and clamped into the reachable workspace.
std::vector<GripperState> sample_candidates(const GripperState& current, const SceneConfig& scene,
                                            const GnbvConfig& cfg, Rng& rng);

/// One clipped step from `from` toward `to`, expressed in the yaw frame of `from`.
Action step_toward(const GripperState& from, const GripperState& to);

/// Mean center of voxels with detection at or above the threshold.
std::optional<Vec3> detection_centroid(const VoxelGrid& grid, double det_threshold);

/// Angle between a pose's optical axis and the direction from its camera to `point`.
double viewing_angle(const GripperState& pose, const CameraIntrinsics& intrinsics, const Vec3& point);

class GnbvAgent final : public Agent {
 public:
  explicit GnbvAgent(GnbvConfig cfg = {});
  std::string name() const override { return "gnbv"; }
  void begin_episode(const Env& env, std::uint64_t seed) override;
  Action act(const Env& env) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<GnbvAgent>(cfg_); }

 private:
  GnbvConfig cfg_;
  Rng rng_{0};
  VisibilityScorer scorer_;
  std::optional<GripperState> goal_;
  bool goal_from_detection_ = false;
  GripperState last_;
};

}  // namespace ips
