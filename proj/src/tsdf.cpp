#include "ips/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "ips/simd/kernels.hpp"

namespace ips {

void TsdfConfig::validate(const Workspace& ws) const {
  if (resolution <= 0) throw ContractViolation("tsdf resolution must be positive");
  if (!(max_weight > 0.0)) throw ContractViolation("tsdf max weight must be positive");
  if (truncation < ws.side_length / resolution) throw ContractViolation("truncation must be at least one voxel");
  if (!(height_ratio > 0.0)) throw ContractViolation("tsdf height ratio must be positive");
}

GridGeometry make_grid_geometry(const Workspace& ws, const TsdfConfig& cfg) {
  cfg.validate(ws);
  GridGeometry g;
  g.nx = g.ny = cfg.resolution;
  g.nz = std::max(1, static_cast<int>(std::lround(cfg.resolution * cfg.height_ratio)));
  g.voxel_size = ws.side_length / cfg.resolution;
  return g;
}

CameraPoseStamped CameraPoseStamped::from_gripper(const GripperState& g, const CameraIntrinsics& intrinsics) {
  return {camera_to_world(g, intrinsics).inverse(), intrinsics};
}

VoxelGrid::VoxelGrid(GridGeometry geometry, double truncation, double max_weight)
    : geometry_(geometry),
      truncation_(truncation),
      max_weight_(max_weight),
      tsdf_(geometry.size(), 1.0f),
      weight_(geometry.size(), 0.0f),
      det_(geometry.size(), 0.0f),
      det_weight_(geometry.size(), 0.0f) {}

namespace {

constexpr char kGridMagic[8] = {'I', 'P', 'S', 'T', 'S', 'D', 'F', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated voxel grid snapshot");
  return v;
}

}  // namespace

void VoxelGrid::save(std::ostream& out) const {
  out.write(kGridMagic, sizeof(kGridMagic));
  write_pod<std::int32_t>(out, geometry_.nx);
  write_pod<std::int32_t>(out, geometry_.ny);
  write_pod<std::int32_t>(out, geometry_.nz);
  write_pod(out, geometry_.voxel_size);
  write_pod(out, truncation_);
  write_pod(out, max_weight_);
  for (const auto* ch : {&tsdf_, &weight_, &det_, &det_weight_})
    out.write(reinterpret_cast<const char*>(ch->data()), static_cast<std::streamsize>(ch->size() * sizeof(float)));
}

VoxelGrid VoxelGrid::load(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGridMagic, sizeof(magic)) != 0) throw std::runtime_error("not a voxel grid snapshot");
  GridGeometry g;
  g.nx = read_pod<std::int32_t>(in);
  g.ny = read_pod<std::int32_t>(in);
  g.nz = read_pod<std::int32_t>(in);
  g.voxel_size = read_pod<double>(in);
  if (g.nx <= 0 || g.ny <= 0 || g.nz <= 0) throw std::runtime_error("invalid voxel grid dimensions");
  const double truncation = read_pod<double>(in);
  const double max_weight = read_pod<double>(in);
  VoxelGrid grid(g, truncation, max_weight);
  for (auto* ch : {&grid.tsdf_, &grid.weight_, &grid.det_, &grid.det_weight_}) {
    in.read(reinterpret_cast<char*>(ch->data()), static_cast<std::streamsize>(ch->size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated voxel grid snapshot");
  }
  return grid;
}

std::size_t integrate(VoxelGrid& grid, const DepthImage& depth, const DetectionImage& detection,
                      const CameraPoseStamped& pose) {
  const CameraIntrinsics& intr = pose.intrinsics;
  intr.validate();
  const std::size_t pixels = static_cast<std::size_t>(intr.width) * intr.height;
  if (depth.width != intr.width || depth.height != intr.height || depth.depth.size() != pixels ||
      detection.width != intr.width || detection.height != intr.height || detection.score.size() != pixels)
    throw ContractViolation("frame size does not match camera intrinsics");

  float max_depth = 0.0f;
  for (float d : depth.depth) max_depth = std::max(max_depth, d);
  if (max_depth <= 0.0f) return 0;

  const GridGeometry& geo = grid.geometry();
  const double v = geo.voxel_size;
  const double reach = std::min(static_cast<double>(max_depth) + grid.truncation(), intr.far_clip);
  const RigidTransform cam_to_world = pose.world_to_camera.inverse();
  const double f = intr.focal();

  // Pyramid truncated at camera depth `reach` encloses every point within that ray distance.
  Vec3 lo = cam_to_world.translation, hi = lo;
  for (double cu : {0.0, static_cast<double>(intr.width)}) {
    for (double cv : {0.0, static_cast<double>(intr.height)}) {
      const Vec3 local{(cu - 0.5 * intr.width) / f * reach, (cv - 0.5 * intr.height) / f * reach, reach};
      const Vec3 p = cam_to_world.apply(local);
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
  }
  auto index_lo = [v](double x) { return static_cast<int>(std::floor(x / v)); };
  const int x0 = std::max(0, index_lo(lo.x)), x1 = std::min(geo.nx - 1, index_lo(hi.x));
  const int y0 = std::max(0, index_lo(lo.y)), y1 = std::min(geo.ny - 1, index_lo(hi.y));
  const int z0 = std::max(0, index_lo(lo.z)), z1 = std::min(geo.nz - 1, index_lo(hi.z));
  if (x0 > x1 || y0 > y1 || z0 > z1) return 0;

  const Mat3& r = pose.world_to_camera.rotation;
  const Vec3 step = r * Vec3{0.0, 0.0, v};

  simd::ColumnFusion col{};
  col.step[0] = static_cast<float>(step.x);
  col.step[1] = static_cast<float>(step.y);
  col.step[2] = static_cast<float>(step.z);
  col.count = z1 - z0 + 1;
  col.focal = static_cast<float>(f);
  col.principal_x = static_cast<float>(0.5 * intr.width);
  col.principal_y = static_cast<float>(0.5 * intr.height);
  col.width = intr.width;
  col.height = intr.height;
  col.near_clip = static_cast<float>(intr.near_clip);
  col.truncation = static_cast<float>(grid.truncation());
  col.inv_truncation = static_cast<float>(1.0 / grid.truncation());
  col.detection_band = static_cast<float>(v);
  col.max_weight = static_cast<float>(grid.max_weight());
  col.depth = depth.depth.data();
  col.score = detection.score.data();

  const auto& fuse = simd::kernels().fuse_column;
  std::size_t newly = 0;
  for (int ix = x0; ix <= x1; ++ix) {
    for (int iy = y0; iy <= y1; ++iy) {
      const Vec3 c = pose.world_to_camera.apply(geo.center(ix, iy, z0));
      col.origin[0] = static_cast<float>(c.x);
      col.origin[1] = static_cast<float>(c.y);
      col.origin[2] = static_cast<float>(c.z);
      const std::size_t base = geo.linear(ix, iy, z0);
      col.tsdf = grid.tsdf().data() + base;
      col.weight = grid.weight().data() + base;
      col.det = grid.det().data() + base;
      col.det_weight = grid.det_weight().data() + base;
      newly += fuse(col);
    }
  }
  return newly;
}

double observed_fraction(const VoxelGrid& grid) {
  if (grid.size() == 0) return 0.0;
  const auto w = grid.weight();
  const auto n = std::count_if(w.begin(), w.end(), [](float x) { return x > 0.0f; });
  return static_cast<double>(n) / static_cast<double>(grid.size());
}

double target_seen_fraction(const VoxelGrid& grid, std::span<const VoxelIndex> truth, double det_threshold) {
  if (truth.empty()) throw ContractViolation("target_seen_fraction needs a non-empty target");
  const auto det = grid.det();
  std::size_t seen = 0;
  for (const VoxelIndex& v : truth)
    if (det[grid.geometry().linear(v)] >= det_threshold) ++seen;
  return static_cast<double>(seen) / static_cast<double>(truth.size());
}

int crop_cells(const GridGeometry& geometry, double crop_side) {
  if (!(crop_side > 0.0)) throw ContractViolation("crop side must be positive");
  return std::max(1, static_cast<int>(std::lround(crop_side / geometry.voxel_size)));
}

bool crop_column(const GridGeometry& geometry, const GripperState& gripper, double crop_side, int cells, int i, int j,
                 int& column_x, int& column_y) {
  const double s = crop_side / cells;
  const double ox = (i + 0.5) * s - 0.5 * crop_side;
  const double oy = (j + 0.5) * s - 0.5 * crop_side;
  const double c = std::cos(gripper.yaw), sn = std::sin(gripper.yaw);
  const double wx = gripper.position.x + c * ox - sn * oy;
  const double wy = gripper.position.y + sn * ox + c * oy;
  const double fx = std::floor(wx / geometry.voxel_size), fy = std::floor(wy / geometry.voxel_size);
  if (fx < 0.0 || fy < 0.0 || fx >= geometry.nx || fy >= geometry.ny) return false;
  column_x = static_cast<int>(fx);
  column_y = static_cast<int>(fy);
  return true;
}

LocalCrop local_crop(const VoxelGrid& grid, const GripperState& gripper, double crop_side) {
  const GridGeometry& geo = grid.geometry();
  LocalCrop crop;
  crop.cells = crop_cells(geo, crop_side);
  crop.layers = geo.nz;
  crop.cell_size = crop_side / crop.cells;
  const std::size_t n = static_cast<std::size_t>(crop.cells) * crop.cells * crop.layers;
  crop.occupancy.assign(n, 0.0f);
  crop.detection.assign(n, 0.0f);
  crop.weight.assign(n, 0.0f);
  for (int i = 0; i < crop.cells; ++i) {
    for (int j = 0; j < crop.cells; ++j) {
      int cx = 0, cy = 0;
      if (!crop_column(geo, gripper, crop_side, crop.cells, i, j, cx, cy)) continue;
      for (int k = 0; k < geo.nz; ++k) {
        const std::size_t g = geo.linear(cx, cy, k);
        const std::size_t o = crop.index(i, j, k);
        crop.occupancy[o] = grid.occupied(g) ? 1.0f : 0.0f;
        crop.detection[o] = grid.det()[g];
        crop.weight[o] = grid.weight()[g];
      }
    }
  }
  return crop;
}

}  // namespace ips
