#pragma once

#include <array>
#include <span>
#include <vector>

#include "ips/scene.hpp"
#include "ips/tsdf.hpp"

namespace ips {

inline constexpr int kCellsPerMap = 17;
inline constexpr int kStateSize = 4 * kCellsPerMap + 3;

/// Layout:
///   [0, 17)   occupancy above the finger plane
///   [17, 34)  occupancy below
///   [34, 51)  detection above
///   [51, 68)  detection below
///   68        occupancy normalization factor (squashed)
///   69        detection normalization factor (squashed)
///   70        roll
/// Each 17-block lists the outer 3x3 ring row-major (8 cells, center skipped),
/// then the subdivided center 3x3 row-major.
using StateVector = std::array<double, kStateSize>;

struct EncoderConfig {
  double crop_side = 1.2;
  /// Finger split plane distance below the wrist origin.
  double finger_plane_offset = 0.02;
  /// Squash constants c in x / (x + c) for the two normalization factors, in
  /// voxels. Zero selects the voxel volume of one 3 cm cube at the grid's resolution.
  double tsdf_scale = 0.0;
  double det_scale = 0.0;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// Sums a square row-major map into 17 cells. Outer boundaries sit at
/// floor(m/3) and m - floor(m/3) so the partition is symmetric under 90 degree
/// rotations; the center block is split the same way.
std::array<double, kCellsPerMap> bin_17(std::span<const double> map, int side);

/// Cell permutation induced by rotating a map 90 degrees counter-clockwise
/// (content at row i, column j moves to row m-1-j, column i):
/// rotated[p[c]] == original[c].
std::array<int, kCellsPerMap> rotation_permutation();

StateVector encode(const VoxelGrid& grid, const GripperState& gripper, const EncoderConfig& cfg);

/// Same result as `encode`, built from an explicit `local_crop`. Slower; kept as a cross-check.
StateVector encode_from_crop(const VoxelGrid& grid, const GripperState& gripper, const EncoderConfig& cfg);

}  // namespace ips
