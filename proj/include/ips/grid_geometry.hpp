#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "ips/geometry.hpp"

namespace ips {

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
  friend auto operator<=>(const VoxelIndex&, const VoxelIndex&) = default;
};

/// Axis-aligned voxel lattice with its origin at the workspace corner on the ground.
/// Linear layout is row-major over (x, y, z) so each z-column is contiguous.
struct GridGeometry {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double voxel_size = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }

  std::size_t linear(int x, int y, int z) const {
    return (static_cast<std::size_t>(x) * ny + static_cast<std::size_t>(y)) * nz + static_cast<std::size_t>(z);
  }
  std::size_t linear(const VoxelIndex& v) const { return linear(v.x, v.y, v.z); }

  bool contains(int x, int y, int z) const { return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz; }

  Vec3 center(int x, int y, int z) const {
    return {(x + 0.5) * voxel_size, (y + 0.5) * voxel_size, (z + 0.5) * voxel_size};
  }

  Vec3 extent() const { return {nx * voxel_size, ny * voxel_size, nz * voxel_size}; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

}  // namespace ips
