#include "ips/encoder.hpp"

#include <cmath>

namespace ips {

void EncoderConfig::validate() const {
  if (!(crop_side > 0.0)) throw ContractViolation("crop side must be positive");
  if (tsdf_scale < 0.0 || det_scale < 0.0) throw ContractViolation("encoder scales must be non-negative");
}

namespace {

struct Bounds {
  int b[4];
};

Bounds split3(int lo, int hi) {
  const int third = (hi - lo) / 3;
  return {{lo, lo + third, hi - third, hi}};
}

/// Cell index of map entry (i, j).
int cell_of(const Bounds& outer, const Bounds& inner, int i, int j) {
  auto band = [](const Bounds& b, int x) { return x < b.b[1] ? 0 : (x < b.b[2] ? 1 : 2); };
  const int a = band(outer, i), c = band(outer, j);
  if (a == 1 && c == 1) return 8 + 3 * band(inner, i) + band(inner, j);
  const int k = 3 * a + c;
  return k < 4 ? k : k - 1;
}

double squash(double x, double c) { return x / (x + c); }

double default_scale(const GridGeometry& geo) {
  const double edge = 0.03 / geo.voxel_size;
  return edge * edge * edge;
}

/// Index of the first voxel layer whose center lies above the finger plane.
int split_layer(const GridGeometry& geo, const GripperState& gripper, const EncoderConfig& cfg) {
  const double plane = gripper.position.z - cfg.finger_plane_offset;
  int k = 0;
  while (k < geo.nz && (k + 0.5) * geo.voxel_size <= plane) ++k;
  return k;
}

struct Maps {
  int side = 0;
  std::vector<double> occ_above, occ_below, det_above, det_below;
  explicit Maps(int m)
      : side(m),
        occ_above(static_cast<std::size_t>(m) * m, 0.0),
        occ_below(occ_above.size(), 0.0),
        det_above(occ_above.size(), 0.0),
        det_below(occ_above.size(), 0.0) {}
};

StateVector finish(const Maps& maps, const GridGeometry& geo, const GripperState& gripper, const EncoderConfig& cfg) {
  StateVector out{};
  const std::vector<double>* src[4] = {&maps.occ_above, &maps.occ_below, &maps.det_above, &maps.det_below};
  for (int c = 0; c < 4; ++c) {
    const auto cells = bin_17(*src[c], maps.side);
    for (int i = 0; i < kCellsPerMap; ++i) out[c * kCellsPerMap + i] = cells[i];
  }
  for (int channel = 0; channel < 2; ++channel) {
    double* block = out.data() + channel * 2 * kCellsPerMap;
    double sum = 0.0;
    for (int i = 0; i < 2 * kCellsPerMap; ++i) sum += block[i];
    if (sum > 0.0)
      for (int i = 0; i < 2 * kCellsPerMap; ++i) block[i] /= sum;
    double scale = channel == 0 ? cfg.tsdf_scale : cfg.det_scale;
    if (scale == 0.0) scale = default_scale(geo);
    out[4 * kCellsPerMap + channel] = squash(sum, scale);
  }
  out[4 * kCellsPerMap + 2] = gripper.roll;
  return out;
}

}  // namespace

std::array<double, kCellsPerMap> bin_17(std::span<const double> map, int side) {
  if (side <= 0 || map.size() != static_cast<std::size_t>(side) * side)
    throw ContractViolation("bin_17 expects a square map");
  const Bounds outer = split3(0, side);
  const Bounds inner = split3(outer.b[1], outer.b[2]);
  std::array<double, kCellsPerMap> cells{};
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) cells[cell_of(outer, inner, i, j)] += map[static_cast<std::size_t>(i) * side + j];
  return cells;
}

std::array<int, kCellsPerMap> rotation_permutation() {
  // Work on a 9x9 map where every cell is a distinct block of the partition.
  constexpr int m = 9;
  const Bounds outer = split3(0, m), inner = split3(outer.b[1], outer.b[2]);
  std::array<int, kCellsPerMap> p{};
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) p[cell_of(outer, inner, i, j)] = cell_of(outer, inner, m - 1 - j, i);
  return p;
}

StateVector encode(const VoxelGrid& grid, const GripperState& gripper, const EncoderConfig& cfg) {
  cfg.validate();
  const GridGeometry& geo = grid.geometry();
  const int split = split_layer(geo, gripper, cfg);

  const std::size_t columns = static_cast<std::size_t>(geo.nx) * geo.ny;
  std::vector<double> occ_a(columns), occ_b(columns), det_a(columns), det_b(columns);
  const auto det = grid.det();
  for (std::size_t col = 0; col < columns; ++col) {
    const std::size_t base = col * geo.nz;
    double oa = 0.0, ob = 0.0, da = 0.0, db = 0.0;
    for (int k = 0; k < geo.nz; ++k) {
      const double o = grid.occupied(base + k) ? 1.0 : 0.0;
      const double d = det[base + k];
      if (k < split) {
        ob += o;
        db += d;
      } else {
        oa += o;
        da += d;
      }
    }
    occ_a[col] = oa;
    occ_b[col] = ob;
    det_a[col] = da;
    det_b[col] = db;
  }

  const int m = crop_cells(geo, cfg.crop_side);
  Maps maps(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      int cx = 0, cy = 0;
      if (!crop_column(geo, gripper, cfg.crop_side, m, i, j, cx, cy)) continue;
      const std::size_t col = static_cast<std::size_t>(cx) * geo.ny + cy;
      const std::size_t o = static_cast<std::size_t>(i) * m + j;
      maps.occ_above[o] = occ_a[col];
      maps.occ_below[o] = occ_b[col];
      maps.det_above[o] = det_a[col];
      maps.det_below[o] = det_b[col];
    }
  }
  return finish(maps, geo, gripper, cfg);
}

StateVector encode_from_crop(const VoxelGrid& grid, const GripperState& gripper, const EncoderConfig& cfg) {
  cfg.validate();
  const GridGeometry& geo = grid.geometry();
  const int split = split_layer(geo, gripper, cfg);
  const LocalCrop crop = local_crop(grid, gripper, cfg.crop_side);
  Maps maps(crop.cells);
  for (int i = 0; i < crop.cells; ++i) {
    for (int j = 0; j < crop.cells; ++j) {
      const std::size_t o = static_cast<std::size_t>(i) * crop.cells + j;
      for (int k = 0; k < crop.layers; ++k) {
        const std::size_t v = crop.index(i, j, k);
        auto& occ = k < split ? maps.occ_below : maps.occ_above;
        auto& det = k < split ? maps.det_below : maps.det_above;
        occ[o] += crop.occupancy[v];
        det[o] += crop.detection[v];
      }
    }
  }
  return finish(maps, geo, gripper, cfg);
}

}  // namespace ips
