#include "ips/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace ips {

namespace {

constexpr int kCylinderSegments = 16;
constexpr double kPlacementGap = 0.002;
constexpr double kPushSlack = 1e-6;

double z_overlap(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::min(hi_a, hi_b) - std::max(lo_a, lo_b);
}

double z_overlap(const ObjectInstance& a, const ObjectInstance& b) {
  return z_overlap(a.bottom(), a.top(), b.bottom(), b.top());
}

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// Half extents of the gripper footprint along world x and y.
Vec2 gripper_half_extents(double yaw, const GripperGeometry& geom) {
  const double c = std::abs(std::cos(yaw)), s = std::abs(std::sin(yaw));
  const double hx = 0.5 * geom.collider.x, hy = 0.5 * geom.collider.y;
  return {c * hx + s * hy, s * hx + c * hy};
}

Vec2 clamp_gripper_xy(Vec2 p, double yaw, const SceneConfig& cfg) {
  const Vec2 h = gripper_half_extents(yaw, cfg.gripper);
  const double side = cfg.workspace.side_length;
  return {clampd(p.x, h.x, side - h.x), clampd(p.y, h.y, side - h.y)};
}

bool inside_walls(const ObjectInstance& o, double side) {
  const Aabb2 b = bounds(o.footprint());
  constexpr double tol = 1e-9;
  return b.lo.x >= -tol && b.lo.y >= -tol && b.hi.x <= side + tol && b.hi.y <= side + tol;
}

ObjectInstance make_object(const SceneConfig& cfg, Rng& rng) {
  ObjectInstance o;
  const double e = cfg.cube_edge;
  if (cfg.kind == SceneKind::Cubes) {
    o.shape = ShapeKind::Box;
    o.size = {e, e, e};
    return o;
  }
  switch (rng.uniform_int(0, 3)) {
    case 0:
      o.shape = ShapeKind::Box;
      o.size = {e, e, e};
      break;
    case 1:
      o.shape = ShapeKind::Box;
      o.size = {2.0 * e, e, e};
      break;
    case 2:
      o.shape = ShapeKind::Cylinder;
      o.size = {e, e, 1.5 * e};
      break;
    default:
      o.shape = ShapeKind::Prism;
      o.size = {1.3 * e, 1.15 * e, e};
      break;
  }
  if (cfg.kind == SceneKind::VariablePrimitives) o.size = rng.uniform(0.5, 2.0) * o.size;
  return o;
}

double circumradius(const ObjectInstance& o) {
  double r = 0.0;
  for (const Vec2& p : o.footprint()) r = std::max(r, norm(p - o.position.xy()));
  if (o.shape == ShapeKind::Cylinder) r = 0.5 * o.size.x;
  return r;
}

bool overlaps_any(const ObjectInstance& o, const std::vector<ObjectInstance>& placed, double gap) {
  const Polygon2 fp = o.footprint();
  for (const ObjectInstance& p : placed) {
    if (z_overlap(o, p) <= -gap) continue;
    if (penetration_depth(fp, p.footprint()) > -gap) return true;
  }
  return false;
}

bool gripper_collides(const GripperState& g, const SceneConfig& cfg, const std::vector<ObjectInstance>& objects) {
  const Polygon2 fp = gripper_footprint(g, cfg.gripper);
  const double lo = g.position.z - cfg.gripper.collider.z, hi = g.position.z;
  for (const ObjectInstance& o : objects) {
    if (z_overlap(lo, hi, o.bottom(), o.top()) <= kContactTolerance) continue;
    if (penetration_depth(fp, o.footprint()) > kContactTolerance) return true;
  }
  return false;
}

void place_scattered(ObjectInstance o, const SceneConfig& cfg, Rng& rng, std::vector<ObjectInstance>& objects) {
  const double side = cfg.workspace.side_length;
  for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
    o.yaw = rng.uniform(-M_PI, M_PI);
    o.position.z = 0.0;
    o.position.x = o.position.y = 0.0;
    const double r = circumradius(o) + 1e-3;
    o.position.x = rng.uniform(r, side - r);
    o.position.y = rng.uniform(r, side - r);
    if (!overlaps_any(o, objects, kPlacementGap)) {
      objects.push_back(o);
      return;
    }
  }
  throw GenerationError("could not place object " + std::to_string(o.id) + " without overlap");
}

/// Builds one vertical stack at a free base location.
void place_pile(int height, int target_slot, const SceneConfig& cfg, Rng& rng, std::vector<ObjectInstance>& objects,
                int& next_id) {
  const double side = cfg.workspace.side_length;
  for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
    std::vector<ObjectInstance> stack;
    const double base_yaw = rng.uniform(-M_PI, M_PI);
    double z = 0.0;
    Vec2 base{};
    bool ok = true;
    for (int level = 0; level < height && ok; ++level) {
      ObjectInstance o = make_object(cfg, rng);
      o.id = next_id + level;
      o.is_target = level == target_slot;
      const double r = circumradius(o) + cfg.pile_jitter + 1e-3;
      if (level == 0) base = {rng.uniform(r, side - r), rng.uniform(r, side - r)};
      o.position = {base.x + rng.uniform(-cfg.pile_jitter, cfg.pile_jitter),
                    base.y + rng.uniform(-cfg.pile_jitter, cfg.pile_jitter), z};
      o.yaw = base_yaw + rng.uniform(-0.1, 0.1);
      z += o.size.z;
      ok = inside_walls(o, side) && !overlaps_any(o, objects, kPlacementGap);
      stack.push_back(o);
    }
    if (!ok) continue;
    objects.insert(objects.end(), stack.begin(), stack.end());
    next_id += height;
    return;
  }
  throw GenerationError("could not place pile");
}

}  // namespace

// ---------------------------------------------------------------------------

Polygon2 ObjectInstance::footprint() const {
  const Vec2 c = position.xy();
  switch (shape) {
    case ShapeKind::Box:
      return rectangle(c, size.x, size.y, yaw);
    case ShapeKind::Cylinder: {
      Polygon2 poly;
      poly.reserve(kCylinderSegments);
      const double r = 0.5 * size.x;
      for (int k = 0; k < kCylinderSegments; ++k) {
        const double a = yaw + 2.0 * M_PI * k / kCylinderSegments;
        poly.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
      }
      return poly;
    }
    case ShapeKind::Prism: {
      const double bx = size.x, by = size.y;
      Polygon2 poly{{-0.5 * bx, -by / 3.0}, {0.5 * bx, -by / 3.0}, {0.0, 2.0 * by / 3.0}};
      for (Vec2& p : poly) p = c + rotate(p, yaw);
      return poly;
    }
  }
  return {};
}

bool ObjectInstance::contains(const Vec3& p) const {
  if (p.z < bottom() || p.z > top()) return false;
  if (shape == ShapeKind::Cylinder) return norm(p.xy() - position.xy()) <= 0.5 * size.x;
  return point_in_convex(footprint(), p.xy());
}

void SceneConfig::validate() const {
  if (min_objects < 0 || min_objects > max_objects) throw ContractViolation("min_objects must be <= max_objects");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(no_target_probability) || !prob(exploration_ratio) || !prob(initial_height_fraction))
    throw ContractViolation("probabilities must lie in [0, 1]");
  if (workspace.side_length <= 0.0 || workspace.wall_height <= gripper.collider.z)
    throw ContractViolation("workspace too small for the gripper");
  if (cube_edge <= 0.0 || num_piles < 0 || min_pile_height < 2 || min_pile_height > max_pile_height)
    throw ContractViolation("invalid object or pile dimensions");
}

const ObjectInstance* SceneState::target() const {
  for (const ObjectInstance& o : objects)
    if (o.is_target) return &o;
  return nullptr;
}

double min_gripper_height(const SceneConfig& config) { return config.gripper.collider.z; }
double max_gripper_height(const SceneConfig& config) { return config.workspace.wall_height; }

Polygon2 gripper_footprint(const GripperState& g, const GripperGeometry& geom) {
  return rectangle(g.position.xy(), geom.collider.x, geom.collider.y, g.yaw);
}

SceneState generate_scene(const SceneConfig& config, Rng& rng) {
  config.validate();
  SceneState scene;
  scene.config = config;
  auto& objects = scene.objects;

  const int count = static_cast<int>(rng.uniform_int(config.min_objects, config.max_objects));
  const bool has_target = count > 0 && !rng.bernoulli(config.no_target_probability);
  const bool pile_scene = config.num_piles > 0 && !rng.bernoulli(config.exploration_ratio);

  int next_id = 0;
  bool target_placed = false;
  if (pile_scene) {
    for (int p = 0; p < config.num_piles; ++p) {
      const int remaining = count - next_id;
      if (remaining < config.min_pile_height) break;
      const int height =
          static_cast<int>(rng.uniform_int(config.min_pile_height, std::min(config.max_pile_height, remaining)));
      int slot = -1;
      if (has_target && !target_placed) {
        slot = static_cast<int>(rng.uniform_int(0, height - 2));  // bottom or middle, never on top
        target_placed = true;
      }
      place_pile(height, slot, config, rng, objects, next_id);
    }
  }
  const int scattered_begin = next_id;
  for (; next_id < count; ++next_id) {
    ObjectInstance o = make_object(config, rng);
    o.id = next_id;
    place_scattered(o, config, rng, objects);
  }
  if (has_target && !target_placed) {
    const auto idx = rng.uniform_int(scattered_begin, count - 1);
    objects[static_cast<std::size_t>(idx)].is_target = true;
  }

  const double zmin = min_gripper_height(config), zmax = max_gripper_height(config);
  for (int attempt = 0;; ++attempt) {
    if (attempt == kPlacementRetries) throw GenerationError("could not place gripper");
    GripperState g;
    g.yaw = rng.uniform(-M_PI, M_PI);
    const Vec2 h = gripper_half_extents(g.yaw, config.gripper);
    const double side = config.workspace.side_length;
    g.position.x = rng.uniform(h.x, side - h.x);
    g.position.y = rng.uniform(h.y, side - h.y);
    g.position.z = rng.uniform(zmin, zmin + config.initial_height_fraction * (zmax - zmin));
    if (!gripper_collides(g, config, objects)) {
      scene.gripper = g;
      break;
    }
  }
  return settle(std::move(scene));
}

namespace {

void shift(ObjectInstance& o, Vec2 dir, double t) {
  o.position.x += t * dir.x;
  o.position.y += t * dir.y;
}

/// Pushes everything the swept collider touches along `dir`; nullopt if an object would leave the walls.
std::optional<std::vector<ObjectInstance>> sweep_push(const std::vector<ObjectInstance>& input, const GripperState& g,
                                                      Vec2 from, Vec2 to, const SceneConfig& cfg) {
  std::vector<ObjectInstance> objects = input;
  const Vec2 delta = to - from;
  const double len = norm(delta);
  if (len < 1e-12) return objects;
  const Vec2 dir = (1.0 / len) * delta;

  GripperState a = g, b = g;
  a.position.x = from.x;
  a.position.y = from.y;
  b.position.x = to.x;
  b.position.y = to.y;
  Polygon2 points = gripper_footprint(a, cfg.gripper);
  const Polygon2 end = gripper_footprint(b, cfg.gripper);
  points.insert(points.end(), end.begin(), end.end());
  const Polygon2 hull = convex_hull(points);
  const double zlo = g.position.z - cfg.gripper.collider.z, zhi = g.position.z;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (z_overlap(zlo, zhi, objects[i].bottom(), objects[i].top()) > kContactTolerance) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const double di = dot(objects[i].position.xy() - from, dir), dj = dot(objects[j].position.xy() - from, dir);
    return di < dj || (di == dj && objects[i].id < objects[j].id);
  });

  const std::size_t budget = 50 * (objects.size() + 1);
  std::size_t moves = 0;
  for (std::size_t i : order) {
    const Polygon2 fp = objects[i].footprint();
    if (penetration_depth(hull, fp) <= kContactTolerance) continue;
    shift(objects[i], dir, push_distance(hull, fp, dir) + kPushSlack);
    std::deque<std::size_t> queue{i};
    while (!queue.empty()) {
      const std::size_t pusher = queue.front();
      queue.pop_front();
      const Polygon2 fp_pusher = objects[pusher].footprint();
      for (std::size_t c = 0; c < objects.size(); ++c) {
        if (c == pusher || z_overlap(objects[pusher], objects[c]) <= kContactTolerance) continue;
        const Polygon2 fp_c = objects[c].footprint();
        if (penetration_depth(fp_pusher, fp_c) <= kContactTolerance) continue;
        shift(objects[c], dir, push_distance(fp_pusher, fp_c, dir) + kPushSlack);
        queue.push_back(c);
        if (++moves > budget) return std::nullopt;
      }
    }
  }
  for (const ObjectInstance& o : objects)
    if (!inside_walls(o, cfg.workspace.side_length)) return std::nullopt;
  return objects;
}

}  // namespace

SceneState step_gripper(const SceneState& scene, const Vec3& translation, double droll, double dyaw) {
  constexpr double tol = 1e-9;
  const auto& lim = kMotionLimits;
  // Horizontal limits hold per axis in the yaw frame, so any rotation of that square is allowed.
  if (std::hypot(translation.x, translation.y) > std::sqrt(2.0) * lim.max_translation + tol ||
      std::abs(translation.z) > lim.max_translation + tol || std::abs(droll) > lim.max_rotation + tol ||
      std::abs(dyaw) > lim.max_rotation + tol)
    throw ContractViolation("gripper step exceeds motion limits");

  SceneState s = scene;
  const SceneConfig& cfg = s.config;
  GripperState& g = s.gripper;
  g.roll = clampd(g.roll + droll, -cfg.gripper.roll_limit, cfg.gripper.roll_limit);
  g.yaw = wrap_angle(g.yaw + dyaw);
  {
    const Vec2 p = clamp_gripper_xy(g.position.xy(), g.yaw, cfg);
    g.position.x = p.x;
    g.position.y = p.y;
  }

  // Vertical motion first; descending stops on top of anything under the collider.
  double z = clampd(g.position.z + translation.z, min_gripper_height(cfg), max_gripper_height(cfg));
  if (z < g.position.z) {
    const Polygon2 fp = gripper_footprint(g, cfg.gripper);
    const double bottom_now = g.position.z - cfg.gripper.collider.z;
    for (const ObjectInstance& o : s.objects) {
      if (o.top() > bottom_now + kContactTolerance) continue;
      if (penetration_depth(fp, o.footprint()) > kContactTolerance) z = std::max(z, o.top() + cfg.gripper.collider.z);
    }
    z = std::min(z, g.position.z);
  }
  g.position.z = z;

  const Vec2 from = g.position.xy();
  const Vec2 to = clamp_gripper_xy(from + translation.xy(), g.yaw, cfg);
  if (auto pushed = sweep_push(s.objects, g, from, to, cfg)) {
    s.objects = std::move(*pushed);
    g.position.x = to.x;
    g.position.y = to.y;
  } else {
    // Blocked against a wall: advance as far as the pushes stay feasible.
    double lo = 0.0, hi = 1.0;
    std::vector<ObjectInstance> best = s.objects;
    for (int it = 0; it < 20; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (auto r = sweep_push(s.objects, g, from, from + mid * (to - from), cfg)) {
        lo = mid;
        best = std::move(*r);
      } else {
        hi = mid;
      }
    }
    s.objects = std::move(best);
    const Vec2 reached = from + lo * (to - from);
    g.position.x = reached.x;
    g.position.y = reached.y;
  }
  return settle(std::move(s));
}

SceneState settle(SceneState scene) {
  auto& objects = scene.objects;
  std::vector<std::size_t> order(objects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return objects[i].bottom() < objects[j].bottom() ||
           (objects[i].bottom() == objects[j].bottom() && objects[i].id < objects[j].id);
  });
  std::vector<Polygon2> footprints(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) footprints[i] = objects[i].footprint();

  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    double support = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t j = order[m];
      if (objects[j].top() > objects[i].bottom() + kContactTolerance) continue;
      if (penetration_depth(footprints[i], footprints[j]) > kContactTolerance)
        support = std::max(support, objects[j].top());
    }
    objects[i].position.z = support;
  }
  return scene;
}

std::optional<std::vector<VoxelIndex>> target_truth(const SceneState& scene, const GridGeometry& grid) {
  const ObjectInstance* t = scene.target();
  if (t == nullptr) return std::nullopt;
  const Aabb2 b = bounds(t->footprint());
  const double v = grid.voxel_size;
  auto lo_index = [v](double x) { return static_cast<int>(std::floor(x / v - 0.5)); };
  auto hi_index = [v](double x) { return static_cast<int>(std::ceil(x / v - 0.5)); };
  std::vector<VoxelIndex> out;
  const double r = t->shape == ShapeKind::Cylinder ? 0.5 * t->size.x : 0.0;
  const int x0 = std::max(0, lo_index(std::min(b.lo.x, t->position.x - r)));
  const int x1 = std::min(grid.nx - 1, hi_index(std::max(b.hi.x, t->position.x + r)));
  const int y0 = std::max(0, lo_index(std::min(b.lo.y, t->position.y - r)));
  const int y1 = std::min(grid.ny - 1, hi_index(std::max(b.hi.y, t->position.y + r)));
  const int z0 = std::max(0, lo_index(t->bottom())), z1 = std::min(grid.nz - 1, hi_index(t->top()));
  for (int x = x0; x <= x1; ++x)
    for (int y = y0; y <= y1; ++y)
      for (int z = z0; z <= z1; ++z)
        if (t->contains(grid.center(x, y, z))) out.push_back({x, y, z});
  if (out.empty()) {
    // Smaller than a voxel: the voxel holding its centroid stands in.
    auto cell = [v](double x, int n) { return std::clamp(static_cast<int>(std::floor(x / v)), 0, n - 1); };
    out.push_back({cell(t->position.x, grid.nx), cell(t->position.y, grid.ny),
                   cell(t->bottom() + 0.5 * t->size.z, grid.nz)});
  }
  return out;
}

std::string to_string(ShapeKind k) {
  switch (k) {
    case ShapeKind::Box: return "box";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Prism: return "prism";
  }
  return "?";
}

std::string to_string(SceneKind k) {
  switch (k) {
    case SceneKind::Cubes: return "cubes";
    case SceneKind::FixedPrimitives: return "fixed_primitives";
    case SceneKind::VariablePrimitives: return "variable_primitives";
  }
  return "?";
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "box") return ShapeKind::Box;
  if (s == "cylinder") return ShapeKind::Cylinder;
  if (s == "prism") return ShapeKind::Prism;
  throw std::invalid_argument("unknown shape: " + s);
}

SceneKind scene_kind_from_string(const std::string& s) {
  if (s == "cubes") return SceneKind::Cubes;
  if (s == "fixed_primitives") return SceneKind::FixedPrimitives;
  if (s == "variable_primitives") return SceneKind::VariablePrimitives;
  throw std::invalid_argument("unknown scene kind: " + s);
}

}  // namespace ips
