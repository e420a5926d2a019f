#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ips/geometry.hpp"
#include "ips/grid_geometry.hpp"
#include "ips/rng.hpp"

namespace ips {

enum class ShapeKind { Box, Cylinder, Prism };
enum class SceneKind { Cubes, FixedPrimitives, VariablePrimitives };

/// Allowed interpenetration between objects (m).
inline constexpr double kContactTolerance = 1e-4;
inline constexpr int kPlacementRetries = 100;

struct ObjectInstance {
  int id = 0;
  ShapeKind shape = ShapeKind::Box;
  /// Box: extents along local x, y, z. Cylinder: (diameter, diameter, height).
  /// Prism: triangle base width (x), triangle depth (y), height (z).
  Vec3 size{0.03, 0.03, 0.03};
  /// Footprint reference point (x, y) and bottom face height (z).
  Vec3 position;
  double yaw = 0.0;
  bool is_target = false;

  double bottom() const { return position.z; }
  double top() const { return position.z + size.z; }
  /// Convex footprint in world xy (cylinders use an inscribed 16-gon).
  Polygon2 footprint() const;
  /// True when `p` lies inside the solid (exact for cylinders).
  bool contains(const Vec3& p) const;

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Workspace {
  double side_length = 0.6;
  double wall_height = 0.6;
  friend bool operator==(const Workspace&, const Workspace&) = default;
};

struct GripperGeometry {
  /// Collider box (x, y, z) hanging below the wrist origin.
  Vec3 collider{0.03, 0.08, 0.06};
  /// Finger split plane distance below the wrist origin.
  double finger_plane_offset = 0.02;
  double roll_limit = M_PI / 3.0;
  friend bool operator==(const GripperGeometry&, const GripperGeometry&) = default;
};

struct GripperState {
  Vec3 position;  ///< wrist origin
  double roll = 0.0;
  double yaw = 0.0;
  friend bool operator==(const GripperState&, const GripperState&) = default;
};

struct SceneConfig {
  int min_objects = 5;
  int max_objects = 25;
  int num_piles = 0;
  double no_target_probability = 0.1;
  /// Fraction of interactive scenes generated without piles.
  double exploration_ratio = 0.0;
  SceneKind kind = SceneKind::Cubes;
  Workspace workspace;
  GripperGeometry gripper;
  double cube_edge = 0.03;
  int min_pile_height = 2;
  int max_pile_height = 5;
  double pile_jitter = 0.003;
  /// Initial wrist height is drawn from the lowest `initial_height_fraction` of the reachable range.
  double initial_height_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct SceneState {
  std::vector<ObjectInstance> objects;
  GripperState gripper;
  SceneConfig config;

  const ObjectInstance* target() const;
  friend bool operator==(const SceneState&, const SceneState&) = default;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MotionLimits {
  double max_translation = 0.06;
  double max_rotation = 0.15;
};
inline constexpr MotionLimits kMotionLimits{};

/// Reachable wrist-height range: fingertips on the ground up to the wall top.
double min_gripper_height(const SceneConfig& config);
double max_gripper_height(const SceneConfig& config);

Polygon2 gripper_footprint(const GripperState& g, const GripperGeometry& geom);

SceneState generate_scene(const SceneConfig& config, Rng& rng);

/// Moves the gripper by a world-frame translation and roll/yaw increments,
/// pushing objects in the way, then settles the scene.
SceneState step_gripper(const SceneState& scene, const Vec3& translation, double droll, double dyaw);

/// Drops every unsupported object straight down onto the highest surface under its footprint.
SceneState settle(SceneState scene);

/// Voxels whose centers lie inside the target; nullopt when the scene has no target.
std::optional<std::vector<VoxelIndex>> target_truth(const SceneState& scene, const GridGeometry& grid);

std::string to_string(ShapeKind k);
std::string to_string(SceneKind k);
ShapeKind shape_kind_from_string(const std::string& s);
SceneKind scene_kind_from_string(const std::string& s);

}  // namespace ips
