#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ips/geometry.hpp"
#include "ips/rng.hpp"
#include "ips/scene.hpp"

namespace ips {

/// Pinhole camera rigidly mounted on the wrist. The optical axis follows the
/// gripper approach direction (down when roll is zero), and the optical center
/// sits `mount_offset` behind the wrist along that axis.
struct CameraIntrinsics {
  int width = 64;
  int height = 64;
  double vertical_fov = 70.0 * M_PI / 180.0;
  double near_clip = 0.05;
  double far_clip = 2.0;
  double mount_offset = 0.05;

  /// Focal length in pixels (square pixels).
  double focal() const;
  void validate() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct DetectionNoise {
  bool enabled = true;
  double lambda = 20.0;
  double false_positive_fraction = 0.02;
  friend bool operator==(const DetectionNoise&, const DetectionNoise&) = default;
};

inline constexpr int kHitNone = -1;
inline constexpr int kHitGround = -2;
inline constexpr int kHitWall = -3;

/// Euclidean distance along each pixel ray; 0 marks "no return".
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  /// Object id hit by each pixel ray, or one of kHitNone / kHitGround / kHitWall.
  std::vector<int> hit;

  bool valid(std::size_t i) const { return depth[i] > 0.0f; }
};

/// Per-pixel target detection score in [0, 1].
struct DetectionImage {
  int width = 0;
  int height = 0;
  std::vector<float> score;
};

/// Camera-to-world transform for a gripper pose (camera frame: x right, y down, z forward).
RigidTransform camera_to_world(const GripperState& gripper, const CameraIntrinsics& intrinsics);

/// Unit ray direction in the camera frame through image coordinates (u, v); pixel centers sit at +0.5.
Vec3 camera_ray(const CameraIntrinsics& intrinsics, double u, double v);

/// Entry distance of a ray into an object (ignoring hits before `t_min`).
std::optional<double> intersect(const ObjectInstance& object, const Vec3& origin, const Vec3& dir, double t_min);

DepthImage render_depth(const SceneState& scene, const CameraIntrinsics& intrinsics);
/// Renders from an explicit camera pose instead of the scene's gripper.
DepthImage render_depth(const SceneState& scene, const CameraIntrinsics& intrinsics,
                        const RigidTransform& cam_to_world);

DetectionImage render_detection(const SceneState& scene, const DepthImage& depth, const CameraIntrinsics& intrinsics,
                                const DetectionNoise& noise, Rng& rng);

/// Debug dumps: binary 8-bit PGM (depth scaled by the far clip, scores by 255) and CSV rows.
void write_pgm(const std::string& path, const DepthImage& depth, double far_clip);
void write_pgm(const std::string& path, const DetectionImage& detection);
void write_csv(const std::string& path, const DepthImage& depth);

}  // namespace ips
