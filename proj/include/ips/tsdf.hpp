#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "ips/camera.hpp"
#include "ips/grid_geometry.hpp"
#include "ips/scene.hpp"

namespace ips {

struct TsdfConfig {
  int resolution = 100;  ///< voxels per workspace side
  double truncation = 0.04;
  double max_weight = 2.0;
  /// Map height as a fraction of the workspace side.
  double height_ratio = 0.5;
  /// Detection value at or above which a voxel counts as detected.
  double det_threshold = 0.5;

  void validate(const Workspace& ws) const;
  friend bool operator==(const TsdfConfig&, const TsdfConfig&) = default;
};

GridGeometry make_grid_geometry(const Workspace& ws, const TsdfConfig& cfg);

struct CameraPoseStamped {
  RigidTransform world_to_camera;
  CameraIntrinsics intrinsics;

  static CameraPoseStamped from_gripper(const GripperState& g, const CameraIntrinsics& intrinsics);
};

/// Dense 4-channel voxel map: signed distance (normalized by the truncation),
/// its weight, a detection value and its weight. A voxel with zero weight has
/// never been observed.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(GridGeometry geometry, double truncation, double max_weight);

  const GridGeometry& geometry() const { return geometry_; }
  double truncation() const { return truncation_; }
  double max_weight() const { return max_weight_; }
  std::size_t size() const { return tsdf_.size(); }

  std::span<const float> tsdf() const { return tsdf_; }
  std::span<const float> weight() const { return weight_; }
  std::span<const float> det() const { return det_; }
  std::span<const float> det_weight() const { return det_weight_; }
  std::span<float> tsdf() { return tsdf_; }
  std::span<float> weight() { return weight_; }
  std::span<float> det() { return det_; }
  std::span<float> det_weight() { return det_weight_; }

  bool observed(std::size_t i) const { return weight_[i] > 0.0f; }
  bool occupied(std::size_t i) const { return weight_[i] > 0.0f && tsdf_[i] < 0.0f; }

  /// Flat binary snapshot: "IPSTSDF1", int32 nx ny nz, float64 voxel_size
  /// truncation max_weight, then the four float32 channels (tsdf, weight, det,
  /// det_weight) in linear voxel order. Native (little-endian) byte order.
  void save(std::ostream& out) const;
  static VoxelGrid load(std::istream& in);

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  GridGeometry geometry_;
  double truncation_ = 0.04;
  double max_weight_ = 2.0;
  std::vector<float> tsdf_, weight_, det_, det_weight_;
};

/// Fuses one depth + detection frame with projective data association.
/// Returns the number of voxels observed for the first time.
std::size_t integrate(VoxelGrid& grid, const DepthImage& depth, const DetectionImage& detection,
                      const CameraPoseStamped& pose);

double observed_fraction(const VoxelGrid& grid);

/// Fraction of the target's voxels whose detection value reaches `det_threshold`.
double target_seen_fraction(const VoxelGrid& grid, std::span<const VoxelIndex> truth, double det_threshold = 0.5);

/// Crop resampled in the yaw-projected gripper frame. Cell (i, j, k) sits at
/// local offset ((i + 0.5) s - L/2, (j + 0.5) s - L/2) from the gripper's xy
/// position (x along the gripper's yaw heading), at voxel layer k.
struct LocalCrop {
  int cells = 0;
  int layers = 0;
  double cell_size = 0.0;
  std::vector<float> occupancy;  ///< 1 where observed and tsdf < 0
  std::vector<float> detection;
  std::vector<float> weight;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * cells + static_cast<std::size_t>(j)) * layers + static_cast<std::size_t>(k);
  }
};

/// Number of crop cells per side used for a given crop size.
int crop_cells(const GridGeometry& geometry, double crop_side);

/// Grid column sampled by crop cell (i, j), or false when it falls outside the map.
bool crop_column(const GridGeometry& geometry, const GripperState& gripper, double crop_side, int cells, int i, int j,
                 int& column_x, int& column_y);

LocalCrop local_crop(const VoxelGrid& grid, const GripperState& gripper, double crop_side);

}  // namespace ips
