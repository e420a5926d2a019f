#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ips/encoder.hpp"

using namespace ips;

namespace {

std::vector<double> rotate_map(const std::vector<double>& map, int m) {
  std::vector<double> out(map.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      out[static_cast<std::size_t>(m - 1 - j) * m + i] = map[static_cast<std::size_t>(i) * m + j];
  return out;
}

VoxelGrid random_grid(Rng& rng, int n, int nz, double voxel) {
  VoxelGrid g(GridGeometry{n, n, nz, voxel}, 0.04, 2.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!rng.bernoulli(0.4)) continue;
    g.weight()[i] = 1.0f;
    g.tsdf()[i] = rng.bernoulli(0.3) ? -0.5f : 0.5f;
    g.det()[i] = static_cast<float>(rng.uniform_int(0, 8)) / 8.0f;
  }
  return g;
}

// Content rotated 90 degrees counter-clockwise about the grid center.
VoxelGrid rotate_grid(const VoxelGrid& g) {
  VoxelGrid r(g.geometry(), g.truncation(), g.max_weight());
  const GridGeometry& geo = g.geometry();
  for (int x = 0; x < geo.nx; ++x)
    for (int y = 0; y < geo.ny; ++y)
      for (int z = 0; z < geo.nz; ++z) {
        const std::size_t from = geo.linear(x, y, z), to = geo.linear(geo.nx - 1 - y, x, z);
        r.tsdf()[to] = g.tsdf()[from];
        r.weight()[to] = g.weight()[from];
        r.det()[to] = g.det()[from];
        r.det_weight()[to] = g.det_weight()[from];
      }
  return r;
}

}  // namespace

TEST_CASE("bin_17 on a 9x9 map of ones") {
  const std::vector<double> ones(81, 1.0);
  const auto cells = bin_17(ones, 9);
  for (int c = 0; c < 8; ++c) CHECK(cells[c] == 9.0);
  for (int c = 8; c < 17; ++c) CHECK(cells[c] == 1.0);

  std::vector<double> delta(81, 0.0);
  delta[4 * 9 + 4] = 1.0;
  const auto center = bin_17(delta, 9);
  CHECK(center[12] == 1.0);
  CHECK(std::accumulate(center.begin(), center.end(), 0.0) == 1.0);

  std::vector<double> corner(81, 0.0);
  corner[8] = 2.0;       // row 0, last column: outer top-right
  corner[8 * 9] = 3.0;   // last row, column 0: outer bottom-left
  corner[3 * 9 + 5] = 4.0;  // inner top-right
  const auto c = bin_17(corner, 9);
  CHECK(c[2] == 2.0);
  CHECK(c[5] == 3.0);
  CHECK(c[10] == 4.0);
  CHECK_THROWS_AS(bin_17(ones, 8), ContractViolation);
}

TEST_CASE("bin_17 partitions any map and commutes with rotation") {
  Rng rng(2);
  const auto perm = rotation_permutation();
  std::array<int, 17> seen{};
  for (int c = 0; c < 17; ++c) ++seen[perm[c]];
  CHECK(std::all_of(seen.begin(), seen.end(), [](int k) { return k == 1; }));
  CHECK(perm[12] == 12);

  for (int m : {1, 2, 3, 5, 9, 10, 11, 17, 100, 200}) {
    std::vector<double> map(static_cast<std::size_t>(m) * m);
    for (double& v : map) v = static_cast<double>(rng.uniform_int(0, 50));
    const auto cells = bin_17(map, m);
    CHECK(std::accumulate(cells.begin(), cells.end(), 0.0) == std::accumulate(map.begin(), map.end(), 0.0));
    const auto rotated = bin_17(rotate_map(map, m), m);
    for (int c = 0; c < 17; ++c) CHECK(rotated[perm[c]] == cells[c]);
  }
}

TEST_CASE("a fresh grid encodes to zeros plus the roll") {
  const VoxelGrid g(GridGeometry{100, 100, 50, 0.006}, 0.04, 2.0);
  GripperState gr;
  gr.position = {0.3, 0.3, 0.2};
  gr.roll = 0.4;
  const StateVector s = encode(g, gr, EncoderConfig{});
  CHECK(s.size() == 71);
  for (int i = 0; i < 70; ++i) CHECK(s[i] == 0.0);
  CHECK(s[70] == 0.4);
}

TEST_CASE("normalized blocks sum to one and the squashed total is reported") {
  VoxelGrid g(GridGeometry{100, 100, 50, 0.006}, 0.04, 2.0);
  const GridGeometry& geo = g.geometry();
  // One fully occupied 5x5x5 cube: 125 voxels, exactly the default squash constant.
  for (int x = 48; x < 53; ++x)
    for (int y = 48; y < 53; ++y)
      for (int z = 0; z < 5; ++z) {
        g.weight()[geo.linear(x, y, z)] = 1.0f;
        g.tsdf()[geo.linear(x, y, z)] = -1.0f;
        g.det()[geo.linear(x, y, z)] = 1.0f;
      }
  GripperState gr;
  gr.position = {0.2, 0.2, 0.3};
  const StateVector s = encode(g, gr, EncoderConfig{});
  CHECK(std::accumulate(s.begin(), s.begin() + 34, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::accumulate(s.begin() + 34, s.begin() + 68, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s[68] == doctest::Approx(0.5));
  CHECK(s[69] == doctest::Approx(0.5));
  // Everything lies below the finger plane.
  CHECK(std::accumulate(s.begin(), s.begin() + 17, 0.0) == 0.0);

  EncoderConfig custom;
  custom.tsdf_scale = 375.0;
  CHECK(encode(g, gr, custom)[68] == doctest::Approx(0.25));
}

TEST_CASE("the finger plane splits the voxel layers") {
  VoxelGrid g(GridGeometry{20, 20, 20, 0.01}, 0.04, 2.0);
  const GridGeometry& geo = g.geometry();
  g.weight()[geo.linear(3, 3, 7)] = 1.0f;
  g.tsdf()[geo.linear(3, 3, 7)] = -1.0f;
  g.weight()[geo.linear(16, 16, 8)] = 1.0f;
  g.tsdf()[geo.linear(16, 16, 8)] = -1.0f;
  GripperState gr;
  gr.position = {0.1, 0.1, 0.1};
  EncoderConfig cfg;
  cfg.crop_side = 0.2;
  const StateVector s = encode(g, gr, cfg);
  // Column (3, 3) is the outer top-left cell; (16, 16) the outer bottom-right.
  CHECK(s[17 + 0] == 0.5);
  CHECK(s[0 + 7] == 0.5);
}

TEST_CASE("rotating the world about the gripper permutes the cells") {
  Rng rng(8);
  const auto perm = rotation_permutation();
  EncoderConfig cfg;
  cfg.crop_side = 0.4;
  for (int trial = 0; trial < 5; ++trial) {
    const VoxelGrid g = random_grid(rng, 40, 10, 0.01);
    const VoxelGrid r = rotate_grid(g);
    GripperState gr;
    gr.position = {0.2, 0.2, 0.05};
    const StateVector a = encode(g, gr, cfg), b = encode(r, gr, cfg);
    for (int block = 0; block < 4; ++block)
      for (int c = 0; c < 17; ++c) CHECK(b[block * 17 + perm[c]] == a[block * 17 + c]);
    CHECK(a[68] == b[68]);
    CHECK(a[69] == b[69]);

    // Turning the gripper with the world leaves the state unchanged.
    GripperState turned = gr;
    turned.yaw = M_PI / 2;
    const StateVector c = encode(r, turned, cfg);
    for (int i = 0; i < kStateSize; ++i) CHECK(c[i] == a[i]);
  }
}

TEST_CASE("encode agrees with the explicit crop path") {
  Rng rng(4);
  const EncoderConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const VoxelGrid g = random_grid(rng, 50, 25, 0.012);
    GripperState gr;
    gr.position = {rng.uniform(0.02, 0.58), rng.uniform(0.02, 0.58), rng.uniform(0.06, 0.6)};
    gr.yaw = rng.uniform(-M_PI, M_PI);
    gr.roll = rng.uniform(-1.0, 1.0);
    const StateVector a = encode(g, gr, cfg), b = encode_from_crop(g, gr, cfg);
    for (int i = 0; i < kStateSize; ++i) {
      CHECK(std::isfinite(a[i]));
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }
  EncoderConfig bad;
  bad.crop_side = -1.0;
  CHECK_THROWS_AS(bad.validate(), ContractViolation);
}
