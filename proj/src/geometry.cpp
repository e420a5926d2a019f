#include "ips/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ips {

namespace {

template <typename F>
void for_each_edge_normal(std::span<const Vec2> poly, F&& f) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = poly[(i + 1) % n] - poly[i];
    const double len = norm(e);
    if (len < 1e-15) continue;
    f(Vec2{e.y / len, -e.x / len});
  }
}

}  // namespace

Polygon2 translated(std::span<const Vec2> poly, Vec2 offset) {
  Polygon2 out(poly.begin(), poly.end());
  for (Vec2& p : out) p = p + offset;
  return out;
}

Polygon2 rectangle(Vec2 center, double size_x, double size_y, double yaw) {
  const double hx = 0.5 * size_x, hy = 0.5 * size_y;
  Polygon2 poly{{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
  for (Vec2& p : poly) p = center + rotate(p, yaw);
  return poly;
}

Polygon2 convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return points;
  Polygon2 hull(2 * points.size());
  std::size_t k = 0;
  for (const Vec2& p : points) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    const Vec2& p = points[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

double penetration_depth(std::span<const Vec2> a, std::span<const Vec2> b) {
  double depth = std::numeric_limits<double>::infinity();
  auto check = [&](Vec2 axis) {
    const Interval pa = project(a, axis), pb = project(b, axis);
    depth = std::min(depth, std::min(pa.hi - pb.lo, pb.hi - pa.lo));
  };
  for_each_edge_normal(a, check);
  for_each_edge_normal(b, check);
  return depth;
}

double push_distance(std::span<const Vec2> obstacle, std::span<const Vec2> mover, Vec2 dir) {
  // Along each separating axis the mover's projection slides by t * dot(dir, axis);
  // the polygons separate as soon as any axis separates.
  double best = std::numeric_limits<double>::infinity();
  bool separated_now = false;
  auto check = [&](Vec2 axis) {
    const Interval po = project(obstacle, axis), pm = project(mover, axis);
    if (pm.lo >= po.hi || pm.hi <= po.lo) {
      separated_now = true;
      return;
    }
    const double speed = dot(dir, axis);
    if (speed > 1e-12) best = std::min(best, (po.hi - pm.lo) / speed);
    else if (speed < -1e-12) best = std::min(best, (po.lo - pm.hi) / speed);
  };
  for_each_edge_normal(obstacle, check);
  for_each_edge_normal(mover, check);
  if (separated_now) return 0.0;
  return best;
}

bool point_in_convex(std::span<const Vec2> poly, Vec2 p) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(poly[(i + 1) % n] - poly[i], p - poly[i]) < 0) return false;
  }
  return true;
}

Aabb2 bounds(std::span<const Vec2> poly) {
  Aabb2 b{poly[0], poly[0]};
  for (const Vec2& p : poly) {
    b.lo.x = std::min(b.lo.x, p.x);
    b.lo.y = std::min(b.lo.y, p.y);
    b.hi.x = std::max(b.hi.x, p.x);
    b.hi.y = std::max(b.hi.y, p.y);
  }
  return b;
}

}  // namespace ips
