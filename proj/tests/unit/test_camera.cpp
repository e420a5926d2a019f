#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ips/camera.hpp"

using namespace ips;

namespace {

SceneState open_floor(double side = 2.0) {
  SceneState s;
  s.config.workspace = {side, 0.6};
  s.gripper.position = {0.5 * side, 0.5 * side, 0.45};
  return s;
}

ObjectInstance cube(int id, Vec3 p, double edge = 0.03, bool target = false) {
  ObjectInstance o;
  o.id = id;
  o.size = {edge, edge, edge};
  o.position = p;
  o.is_target = target;
  return o;
}

// Slab test against an axis-aligned box; entry distance or +inf.
double slab(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& d) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  const double os[3] = {o.x, o.y, o.z}, ds[3] = {d.x, d.y, d.z}, los[3] = {lo.x, lo.y, lo.z},
               his[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(ds[a]) < 1e-15) {
      if (os[a] < los[a] || os[a] > his[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (los[a] - os[a]) / ds[a], tb = (his[a] - os[a]) / ds[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
}

}  // namespace

TEST_CASE("downward camera over an empty floor sees a plane 0.5 m away") {
  const SceneState s = open_floor();
  const CameraIntrinsics cam;
  const DepthImage img = render_depth(s, cam);
  const RigidTransform c2w = camera_to_world(s.gripper, cam);
  CHECK(c2w.translation.z == doctest::Approx(0.5));
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * cam.width + u;
      REQUIRE(img.valid(i));
      CHECK(img.hit[i] == kHitGround);
      const Vec3 dir = c2w.rotation * camera_ray(cam, u + 0.5, v + 0.5);
      CHECK(img.depth[i] * -dir.z == doctest::Approx(0.5).epsilon(1e-6));
    }
  }
}

TEST_CASE("camera frame axes follow the gripper") {
  GripperState g;
  g.yaw = M_PI / 2;
  const RigidTransform t = camera_to_world(g, CameraIntrinsics{});
  const Vec3 forward = t.rotation.column(2), right = t.rotation.column(0);
  CHECK(forward.z == doctest::Approx(-1.0));
  CHECK(right.y == doctest::Approx(1.0));
  g.roll = 0.5;
  const Vec3 tilted = camera_to_world(g, CameraIntrinsics{}).rotation.column(2);
  CHECK(-tilted.z == doctest::Approx(std::cos(0.5)));
  const Vec3 ray = camera_ray(CameraIntrinsics{}, 32.0, 32.0);
  CHECK(ray.z == doctest::Approx(1.0));
}

TEST_CASE("rendered depth matches analytic ray-box intersection") {
  Rng rng(3);
  const CameraIntrinsics cam;
  for (int trial = 0; trial < 10; ++trial) {
    SceneState s = open_floor();
    for (int k = 0; k < 6; ++k)
      s.objects.push_back(cube(k, {rng.uniform(0.85, 1.15), rng.uniform(0.85, 1.15), rng.uniform(0.0, 0.1)},
                               rng.uniform(0.02, 0.08)));
    s.gripper.position = {rng.uniform(0.9, 1.1), rng.uniform(0.9, 1.1), rng.uniform(0.3, 0.5)};
    s.gripper.yaw = rng.uniform(-M_PI, M_PI);
    const DepthImage img = render_depth(s, cam);
    const RigidTransform c2w = camera_to_world(s.gripper, cam);
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Vec3 d = c2w.rotation * camera_ray(cam, u + 0.5, v + 0.5);
        const Vec3 o = c2w.translation;
        double best = -o.z / d.z;
        int label = kHitGround;
        for (const ObjectInstance& c : s.objects) {
          const Vec3 h{0.5 * c.size.x, 0.5 * c.size.y, 0.0};
          const double t = slab(c.position - h, c.position + h + Vec3{0, 0, c.size.z}, o, d);
          if (t < best) {
            best = t;
            label = c.id;
          }
        }
        const std::size_t i = static_cast<std::size_t>(v) * cam.width + u;
        CHECK(img.depth[i] == doctest::Approx(best).epsilon(1e-6));
        CHECK(img.hit[i] == label);
      }
    }
  }
}

TEST_CASE("nothing is returned beyond the far clip") {
  SceneState s = open_floor();
  CameraIntrinsics cam;
  cam.far_clip = 0.3;
  const DepthImage img = render_depth(s, cam);
  CHECK(std::all_of(img.depth.begin(), img.depth.end(), [](float d) { return d == 0.0f; }));
  CHECK(std::all_of(img.hit.begin(), img.hit.end(), [](int h) { return h == kHitNone; }));
}

TEST_CASE("walls bound the view of a small workspace") {
  SceneState s = open_floor(0.4);
  s.gripper.position.z = 0.55;
  const DepthImage img = render_depth(s, CameraIntrinsics{});
  CHECK(std::count(img.hit.begin(), img.hit.end(), kHitWall) > 0);
  CHECK(img.hit[32 * 64 + 32] == kHitGround);
}

TEST_CASE("noise-free detection marks exactly the target pixels") {
  SceneState s = open_floor();
  s.objects.push_back(cube(0, {1.0, 1.0, 0.0}, 0.1, true));
  s.objects.push_back(cube(1, {1.2, 1.0, 0.0}, 0.1));
  const CameraIntrinsics cam;
  const DepthImage depth = render_depth(s, cam);
  DetectionNoise off;
  off.enabled = false;
  Rng rng(1);
  const DetectionImage det = render_detection(s, depth, cam, off, rng);
  int on = 0;
  for (std::size_t i = 0; i < det.score.size(); ++i) {
    CHECK(det.score[i] == (depth.hit[i] == 0 ? 1.0f : 0.0f));
    on += det.score[i] > 0.0f;
  }
  CHECK(on > 0);
  CHECK(rng.cursor() == 0);
}

TEST_CASE("detection noise statistics") {
  const CameraIntrinsics cam;
  const DetectionNoise noise;
  SceneState empty = open_floor();
  const DepthImage depth = render_depth(empty, cam);
  Rng rng(11);
  double fp_sum = 0.0;
  std::size_t fp_count = 0;
  for (int frame = 0; frame < 50; ++frame) {
    const DetectionImage det = render_detection(empty, depth, cam, noise, rng);
    const auto n = std::count_if(det.score.begin(), det.score.end(), [](float x) { return x > 0.0f; });
    CHECK(n == std::lround(0.02 * cam.width * cam.height));
    for (float x : det.score) {
      fp_sum += x;
      fp_count += x > 0.0f;
    }
  }
  CHECK(fp_sum / fp_count == doctest::Approx(0.05).epsilon(0.1));

  SceneState full = open_floor();
  full.objects.push_back(cube(0, {1.0, 1.0, 0.0}, 1.0, true));
  full.objects[0].size.z = 0.1;
  const DepthImage near = render_depth(full, cam);
  DetectionNoise no_fp;
  no_fp.false_positive_fraction = 0.0;
  const DetectionImage det = render_detection(full, near, cam, no_fp, rng);
  double sum = 0.0;
  for (float x : det.score) sum += x;
  CHECK(sum / det.score.size() == doctest::Approx(0.95).epsilon(0.01));

  Rng a(5), b(5);
  CHECK(render_detection(full, near, cam, noise, a).score == render_detection(full, near, cam, noise, b).score);
  CameraIntrinsics other;
  other.width = 32;
  CHECK_THROWS_AS(render_detection(full, near, other, noise, a), ContractViolation);
}

TEST_CASE("debug dumps write well-formed files") {
  const SceneState s = open_floor();
  const CameraIntrinsics cam;
  const DepthImage depth = render_depth(s, cam);
  const auto dir = std::filesystem::temp_directory_path();
  const auto pgm = (dir / "ips_depth_test.pgm").string(), csv = (dir / "ips_depth_test.csv").string();
  write_pgm(pgm, depth, cam.far_clip);
  write_csv(csv, depth);
  std::ifstream f(pgm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  f >> magic >> w >> h >> maxv;
  CHECK(magic == "P5");
  CHECK(w == 64);
  CHECK(maxv == 255);
  CHECK(std::filesystem::file_size(pgm) == 13 + 64 * 64);
  std::ifstream c(csv);
  std::string line;
  int rows = 0;
  while (std::getline(c, line)) ++rows;
  CHECK(rows == 64);
  std::filesystem::remove(pgm);
  std::filesystem::remove(csv);
}
