#include "ips/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace ips {

double CameraIntrinsics::focal() const { return 0.5 * height / std::tan(0.5 * vertical_fov); }

void CameraIntrinsics::validate() const {
  if (width <= 0 || height <= 0) throw ContractViolation("camera image must be non-empty");
  if (!(near_clip > 0.0 && near_clip < far_clip))
    throw ContractViolation("camera clip range must satisfy 0 < near < far");
  if (!(vertical_fov > 0.0 && vertical_fov < M_PI)) throw ContractViolation("camera field of view out of range");
}

RigidTransform camera_to_world(const GripperState& gripper, const CameraIntrinsics& intrinsics) {
  const Mat3 r = Mat3::rot_z(gripper.yaw) * Mat3::rot_x(gripper.roll);
  const Vec3 x_axis = r.column(0);
  const Vec3 y_axis = -r.column(1);
  const Vec3 z_axis = -r.column(2);  // approach direction
  RigidTransform t;
  t.rotation = Mat3::from_columns(x_axis, y_axis, z_axis);
  t.translation = gripper.position - intrinsics.mount_offset * z_axis;
  return t;
}

Vec3 camera_ray(const CameraIntrinsics& intrinsics, double u, double v) {
  const double f = intrinsics.focal();
  return normalized(Vec3{(u - 0.5 * intrinsics.width) / f, (v - 0.5 * intrinsics.height) / f, 1.0});
}

namespace {

std::optional<double> intersect_cylinder(const ObjectInstance& o, const Vec3& origin, const Vec3& dir, double t_min) {
  double t0 = t_min, t1 = std::numeric_limits<double>::infinity();
  if (std::abs(dir.z) < 1e-15) {
    if (origin.z < o.bottom() || origin.z > o.top()) return std::nullopt;
  } else {
    double a = (o.bottom() - origin.z) / dir.z, b = (o.top() - origin.z) / dir.z;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  const double r = 0.5 * o.size.x;
  const Vec2 p = origin.xy() - o.position.xy();
  const Vec2 d = dir.xy();
  const double qa = dot(d, d), qb = 2.0 * dot(p, d), qc = dot(p, p) - r * r;
  if (qa < 1e-18) {
    if (qc > 0.0) return std::nullopt;
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    t0 = std::max(t0, (-qb - s) / (2.0 * qa));
    t1 = std::min(t1, (-qb + s) / (2.0 * qa));
  }
  if (t0 > t1) return std::nullopt;
  return t0;
}

/// Cyrus-Beck clipping against the vertical extrusion of a CCW convex footprint.
std::optional<double> intersect_extruded(const ObjectInstance& o, const Vec3& origin, const Vec3& dir, double t_min) {
  double t0 = t_min, t1 = std::numeric_limits<double>::infinity();
  if (std::abs(dir.z) < 1e-15) {
    if (origin.z < o.bottom() || origin.z > o.top()) return std::nullopt;
  } else {
    double a = (o.bottom() - origin.z) / dir.z, b = (o.top() - origin.z) / dir.z;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  const Polygon2 poly = o.footprint();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n && t0 <= t1; ++i) {
    const Vec2 e = poly[(i + 1) % n] - poly[i];
    const Vec2 normal{e.y, -e.x};
    const double denom = dot(normal, dir.xy());
    const double num = dot(normal, poly[i] - origin.xy());
    if (std::abs(denom) < 1e-18) {
      if (num < 0.0) return std::nullopt;
      continue;
    }
    const double t = num / denom;
    if (denom < 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
  }
  if (t0 > t1) return std::nullopt;
  return t0;
}

struct ObjectBound {
  Vec3 center;
  double radius;
};

struct Hit {
  double t;
  int label;
};

Hit trace(const SceneState& scene, const std::vector<ObjectBound>& bounds, const Vec3& origin, const Vec3& dir,
          double t_min, double t_max) {
  Hit best{t_max, kHitNone};
  const double side = scene.config.workspace.side_length;
  const double wall_h = scene.config.workspace.wall_height;

  if (dir.z < 0.0) {
    const double t = -origin.z / dir.z;
    if (t >= t_min && t < best.t) best = {t, kHitGround};
  }
  auto wall = [&](double o, double d, double plane) {
    if (d == 0.0) return;
    const double t = (plane - o) / d;
    if (t < t_min || t >= best.t) return;
    const double z = origin.z + t * dir.z;
    if (z >= 0.0 && z <= wall_h) best = {t, kHitWall};
  };
  if (dir.x < 0.0) wall(origin.x, dir.x, 0.0);
  if (dir.x > 0.0) wall(origin.x, dir.x, side);
  if (dir.y < 0.0) wall(origin.y, dir.y, 0.0);
  if (dir.y > 0.0) wall(origin.y, dir.y, side);

  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const ObjectBound& b = bounds[i];
    const Vec3 oc = b.center - origin;
    const double along = dot(oc, dir);
    if (along + b.radius < t_min || along - b.radius > best.t) continue;
    if (dot(oc, oc) - along * along > b.radius * b.radius) continue;
    const ObjectInstance& o = scene.objects[i];
    const auto t = intersect(o, origin, dir, t_min);
    if (t && *t < best.t) best = {*t, o.id};
  }
  return best;
}

}  // namespace

std::optional<double> intersect(const ObjectInstance& object, const Vec3& origin, const Vec3& dir, double t_min) {
  if (object.shape == ShapeKind::Cylinder) return intersect_cylinder(object, origin, dir, t_min);
  return intersect_extruded(object, origin, dir, t_min);
}

DepthImage render_depth(const SceneState& scene, const CameraIntrinsics& intrinsics) {
  return render_depth(scene, intrinsics, camera_to_world(scene.gripper, intrinsics));
}

DepthImage render_depth(const SceneState& scene, const CameraIntrinsics& intrinsics,
                        const RigidTransform& cam_to_world) {
  intrinsics.validate();
  DepthImage img;
  img.width = intrinsics.width;
  img.height = intrinsics.height;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.depth.assign(n, 0.0f);
  img.hit.assign(n, kHitNone);

  std::vector<ObjectBound> bounds;
  bounds.reserve(scene.objects.size());
  for (const ObjectInstance& o : scene.objects) {
    const Vec2 c = o.position.xy();
    double r = 0.0;
    for (const Vec2& p : o.footprint()) r = std::max(r, norm(p - c));
    if (o.shape == ShapeKind::Cylinder) r = 0.5 * o.size.x;
    const double h = 0.5 * o.size.z;
    bounds.push_back({{c.x, c.y, o.bottom() + h}, std::sqrt(r * r + h * h) + 1e-9});
  }

  const Vec3 origin = cam_to_world.translation;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const Vec3 dir = cam_to_world.rotation * camera_ray(intrinsics, u + 0.5, v + 0.5);
      const Hit hit = trace(scene, bounds, origin, dir, intrinsics.near_clip, intrinsics.far_clip);
      const std::size_t i = static_cast<std::size_t>(v) * img.width + u;
      if (hit.label != kHitNone && hit.t > intrinsics.near_clip && hit.t < intrinsics.far_clip) {
        img.depth[i] = static_cast<float>(hit.t);
        img.hit[i] = hit.label;
      }
    }
  }
  return img;
}

DetectionImage render_detection(const SceneState& scene, const DepthImage& depth, const CameraIntrinsics& intrinsics,
                                const DetectionNoise& noise, Rng& rng) {
  if (depth.width != intrinsics.width || depth.height != intrinsics.height)
    throw ContractViolation("depth image does not match camera intrinsics");
  DetectionImage out;
  out.width = depth.width;
  out.height = depth.height;
  const std::size_t n = depth.depth.size();
  out.score.assign(n, 0.0f);

  const ObjectInstance* target = scene.target();
  if (target != nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!depth.valid(i) || depth.hit[i] != target->id) continue;
      out.score[i] = noise.enabled ? static_cast<float>(std::max(0.0, 1.0 - rng.exponential(noise.lambda))) : 1.0f;
    }
  }
  if (noise.enabled && noise.false_positive_fraction > 0.0) {
    const auto k = static_cast<std::size_t>(std::lround(noise.false_positive_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t j = 0; j < std::min(k, n); ++j) {
      const auto pick =
          static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(j), static_cast<std::int64_t>(n - 1)));
      std::swap(idx[j], idx[pick]);
      out.score[idx[j]] = static_cast<float>(std::min(1.0, rng.exponential(noise.lambda)));
    }
  }
  return out;
}

namespace {

void write_pgm_bytes(const std::string& path, int w, int h, const std::vector<unsigned char>& px) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "P5\n" << w << ' ' << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

unsigned char to_byte(double x) { return static_cast<unsigned char>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_pgm(const std::string& path, const DepthImage& depth, double far_clip) {
  std::vector<unsigned char> px(depth.depth.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(depth.depth[i] / far_clip);
  write_pgm_bytes(path, depth.width, depth.height, px);
}

void write_pgm(const std::string& path, const DetectionImage& detection) {
  std::vector<unsigned char> px(detection.score.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(detection.score[i]);
  write_pgm_bytes(path, detection.width, detection.height, px);
}

void write_csv(const std::string& path, const DepthImage& depth) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (u) f << ',';
      f << depth.depth[static_cast<std::size_t>(v) * depth.width + u];
    }
    f << '\n';
  }
}

}  // namespace ips
