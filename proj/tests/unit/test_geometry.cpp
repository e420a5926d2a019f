#include <doctest.h>

#include <algorithm>

#include "ips/geometry.hpp"
#include "ips/rng.hpp"

using namespace ips;

TEST_CASE("rectangle is counter-clockwise with the requested extents") {
  const Polygon2 r = rectangle({1.0, 2.0}, 0.4, 0.2, 0.0);
  REQUIRE(r.size() == 4);
  double area = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) area += cross(r[i], r[(i + 1) % r.size()]);
  CHECK(0.5 * area == doctest::Approx(0.08));
  const Aabb2 b = bounds(r);
  CHECK(b.lo.x == doctest::Approx(0.8));
  CHECK(b.hi.y == doctest::Approx(2.1));
}

TEST_CASE("penetration depth of axis-aligned squares is the overlap width") {
  const Polygon2 a = rectangle({0.0, 0.0}, 1.0, 1.0, 0.0);
  CHECK(penetration_depth(a, rectangle({0.7, 0.0}, 1.0, 1.0, 0.0)) == doctest::Approx(0.3));
  CHECK(penetration_depth(a, rectangle({0.7, 0.9}, 1.0, 1.0, 0.0)) == doctest::Approx(0.1));
  CHECK(penetration_depth(a, rectangle({1.5, 0.0}, 1.0, 1.0, 0.0)) <= 0.0);
  // A rotated square touching by a corner is separated along the diagonal axis.
  CHECK(penetration_depth(a, rectangle({0.5 + std::sqrt(0.5) + 0.01, 0.0}, 1.0, 1.0, M_PI / 4)) <= 0.0);
}

TEST_CASE("push distance clears the obstacle exactly") {
  const Polygon2 obstacle = rectangle({0.0, 0.0}, 1.0, 1.0, 0.0);
  const Polygon2 mover = rectangle({0.8, 0.0}, 1.0, 1.0, 0.0);
  CHECK(push_distance(obstacle, mover, {1.0, 0.0}) == doctest::Approx(0.2));
  CHECK(push_distance(obstacle, mover, {-1.0, 0.0}) == doctest::Approx(1.8));
  CHECK(push_distance(obstacle, rectangle({3.0, 0.0}, 1.0, 1.0, 0.0), {1.0, 0.0}) == 0.0);

  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const Polygon2 o = rectangle({rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)}, rng.uniform(0.1, 0.5),
                                 rng.uniform(0.1, 0.5), rng.uniform(-M_PI, M_PI));
    const Polygon2 m = rectangle({rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)}, rng.uniform(0.1, 0.5),
                                 rng.uniform(0.1, 0.5), rng.uniform(-M_PI, M_PI));
    const double a = rng.uniform(-M_PI, M_PI);
    const Vec2 dir{std::cos(a), std::sin(a)};
    const double t = push_distance(o, m, dir);
    CHECK(penetration_depth(o, translated(m, (t + 1e-9) * dir)) <= 1e-8);
    if (t > 1e-6) CHECK(penetration_depth(o, translated(m, (t - 1e-6) * dir)) > 0.0);
  }
}

TEST_CASE("convex hull drops interior and collinear points") {
  const Polygon2 hull = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0.0}, {0.2, 0.7}});
  CHECK(hull.size() == 4);
  for (std::size_t i = 0; i < hull.size(); ++i)
    CHECK(cross(hull[(i + 1) % 4] - hull[i], hull[(i + 2) % 4] - hull[(i + 1) % 4]) > 0.0);
  CHECK(point_in_convex(hull, {0.5, 0.5}));
  CHECK_FALSE(point_in_convex(hull, {1.5, 0.5}));
}

TEST_CASE("rigid transform inverse round-trips points") {
  RigidTransform t{Mat3::rot_z(0.7) * Mat3::rot_x(-0.3), {0.1, -0.2, 0.5}};
  const Vec3 p{0.3, 0.4, -0.9};
  const Vec3 q = t.inverse().apply(t.apply(p));
  CHECK(q.x == doctest::Approx(p.x));
  CHECK(q.y == doctest::Approx(p.y));
  CHECK(q.z == doctest::Approx(p.z));
  CHECK(std::abs(wrap_angle(3.0 * M_PI)) == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(std::abs(wrap_angle(-2.5 * M_PI) + 0.5 * M_PI) < 1e-12);
}

TEST_CASE("rng streams are reproducible and counted") {
  Rng a(derive_seed(5, 0)), b(derive_seed(5, 0)), c(derive_seed(5, 1));
  CHECK(a() == b());
  CHECK(a.cursor() == 1);
  CHECK(derive_seed(5, 0) != derive_seed(5, 1));
  int hits[3] = {0, 0, 0};
  for (int i = 0; i < 3000; ++i) ++hits[c.uniform_int(0, 2)];
  for (int h : hits) CHECK(h > 850);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = c.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / 20000) < 0.03);
  CHECK(sq / 20000 == doctest::Approx(1.0).epsilon(0.04));
}
