#include "ips/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace ips {

using nlohmann::json;

namespace {

json vec3(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

/// Reads keys of one JSON object into fields, rejecting keys nobody claimed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument(where_ + ": expected an object");
  }
  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!claimed_.count(key)) throw std::invalid_argument(where_ + ": unknown key '" + key + "'");
  }

  template <typename T>
  void get(const char* key, T& field) {
    claimed_.insert(key);
    if (j_.contains(key)) field = j_.at(key).get<T>();
  }
  const json* sub(const char* key) {
    claimed_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string where(const char* key) const { return where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> claimed_;
};

}  // namespace

json to_json(const EpisodeConfig& c) {
  const SceneConfig& s = c.scene;
  json scene = {
      {"min_objects", s.min_objects},
      {"max_objects", s.max_objects},
      {"num_piles", s.num_piles},
      {"no_target_probability", s.no_target_probability},
      {"exploration_ratio", s.exploration_ratio},
      {"kind", to_string(s.kind)},
      {"workspace", {{"side_length", s.workspace.side_length}, {"wall_height", s.workspace.wall_height}}},
      {"gripper",
       {{"collider", vec3(s.gripper.collider)},
        {"finger_plane_offset", s.gripper.finger_plane_offset},
        {"roll_limit", s.gripper.roll_limit}}},
      {"cube_edge", s.cube_edge},
      {"min_pile_height", s.min_pile_height},
      {"max_pile_height", s.max_pile_height},
      {"pile_jitter", s.pile_jitter},
      {"initial_height_fraction", s.initial_height_fraction},
      {"seed", s.seed},
  };
  return {
      {"task", to_string(c.task)},
      {"horizon", c.horizon},
      {"scene", scene},
      {"tsdf",
       {{"resolution", c.tsdf.resolution},
        {"truncation", c.tsdf.truncation},
        {"max_weight", c.tsdf.max_weight},
        {"height_ratio", c.tsdf.height_ratio},
        {"det_threshold", c.tsdf.det_threshold}}},
      {"encoder",
       {{"crop_side", c.encoder.crop_side},
        {"finger_plane_offset", c.encoder.finger_plane_offset},
        {"tsdf_scale", c.encoder.tsdf_scale},
        {"det_scale", c.encoder.det_scale}}},
      {"reward",
       {{"time_penalty", c.reward.time_penalty},
        {"final_reward", c.reward.final_reward},
        {"kappa", c.reward.kappa},
        {"seen_threshold", c.reward.seen_threshold}}},
      {"camera",
       {{"width", c.camera.width},
        {"height", c.camera.height},
        {"vertical_fov", c.camera.vertical_fov},
        {"near_clip", c.camera.near_clip},
        {"far_clip", c.camera.far_clip},
        {"mount_offset", c.camera.mount_offset}}},
      {"noise",
       {{"enabled", c.noise.enabled},
        {"lambda", c.noise.lambda},
        {"false_positive_fraction", c.noise.false_positive_fraction}}},
  };
}

EpisodeConfig episode_config_from_json(const json& j) {
  EpisodeConfig c;
  Reader r(j, "config");
  std::string task = to_string(c.task);
  r.get("task", task);
  c.task = task_from_string(task);
  r.get("horizon", c.horizon);
  if (const json* sj = r.sub("scene")) {
    SceneConfig& s = c.scene;
    Reader rs(*sj, r.where("scene"));
    rs.get("min_objects", s.min_objects);
    rs.get("max_objects", s.max_objects);
    rs.get("num_piles", s.num_piles);
    rs.get("no_target_probability", s.no_target_probability);
    rs.get("exploration_ratio", s.exploration_ratio);
    std::string kind = to_string(s.kind);
    rs.get("kind", kind);
    s.kind = scene_kind_from_string(kind);
    if (const json* w = rs.sub("workspace")) {
      Reader rw(*w, rs.where("workspace"));
      rw.get("side_length", s.workspace.side_length);
      rw.get("wall_height", s.workspace.wall_height);
      rw.finish();
    }
    if (const json* g = rs.sub("gripper")) {
      Reader rg(*g, rs.where("gripper"));
      if (const json* col = rg.sub("collider")) s.gripper.collider = vec3_from(*col);
      rg.get("finger_plane_offset", s.gripper.finger_plane_offset);
      rg.get("roll_limit", s.gripper.roll_limit);
      rg.finish();
    }
    rs.get("cube_edge", s.cube_edge);
    rs.get("min_pile_height", s.min_pile_height);
    rs.get("max_pile_height", s.max_pile_height);
    rs.get("pile_jitter", s.pile_jitter);
    rs.get("initial_height_fraction", s.initial_height_fraction);
    rs.get("seed", s.seed);
    rs.finish();
  }
  if (const json* tj = r.sub("tsdf")) {
    Reader rt(*tj, r.where("tsdf"));
    rt.get("resolution", c.tsdf.resolution);
    rt.get("truncation", c.tsdf.truncation);
    rt.get("max_weight", c.tsdf.max_weight);
    rt.get("height_ratio", c.tsdf.height_ratio);
    rt.get("det_threshold", c.tsdf.det_threshold);
    rt.finish();
  }
  if (const json* ej = r.sub("encoder")) {
    Reader re(*ej, r.where("encoder"));
    re.get("crop_side", c.encoder.crop_side);
    re.get("finger_plane_offset", c.encoder.finger_plane_offset);
    re.get("tsdf_scale", c.encoder.tsdf_scale);
    re.get("det_scale", c.encoder.det_scale);
    re.finish();
  }
  if (const json* rj = r.sub("reward")) {
    Reader rr(*rj, r.where("reward"));
    rr.get("time_penalty", c.reward.time_penalty);
    rr.get("final_reward", c.reward.final_reward);
    rr.get("kappa", c.reward.kappa);
    rr.get("seen_threshold", c.reward.seen_threshold);
    rr.finish();
  }
  if (const json* cj = r.sub("camera")) {
    Reader rc(*cj, r.where("camera"));
    rc.get("width", c.camera.width);
    rc.get("height", c.camera.height);
    rc.get("vertical_fov", c.camera.vertical_fov);
    rc.get("near_clip", c.camera.near_clip);
    rc.get("far_clip", c.camera.far_clip);
    rc.get("mount_offset", c.camera.mount_offset);
    rc.finish();
  }
  if (const json* nj = r.sub("noise")) {
    Reader rn(*nj, r.where("noise"));
    rn.get("enabled", c.noise.enabled);
    rn.get("lambda", c.noise.lambda);
    rn.get("false_positive_fraction", c.noise.false_positive_fraction);
    rn.finish();
  }
  r.finish();
  return c;
}

EpisodeConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  EpisodeConfig cfg = episode_config_from_json(json::parse(in));
  cfg.validate();
  return cfg;
}

void save_config(const std::string& path, const EpisodeConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path);
  out << to_json(cfg).dump(2) << '\n';
}

std::string config_digest(const EpisodeConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EpisodeConfig preset(const std::string& name) {
  EpisodeConfig c;
  c.scene.no_target_probability = 0.1;
  if (name == "active") {
    c.task = Task::Active;
    c.horizon = 130;
    c.scene.min_objects = 5;
    c.scene.max_objects = 25;
  } else if (name == "active-large") {
    c.task = Task::Active;
    c.horizon = 500;
    c.scene.min_objects = 10;
    c.scene.max_objects = 40;
    c.scene.workspace = {1.2, 1.2};
  } else if (name == "interactive") {
    c.task = Task::Interactive;
    c.horizon = 130;
    c.scene.min_objects = 15;
    c.scene.max_objects = 75;
    c.scene.num_piles = 3;
    c.scene.exploration_ratio = 0.25;
  } else if (name == "smoke") {
    c.task = Task::Active;
    c.horizon = 40;
    c.scene.min_objects = 1;
    c.scene.max_objects = 8;
    c.scene.workspace = {0.4, 0.4};
    c.tsdf.resolution = 50;
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  c.validate();
  return c;
}

std::vector<std::string> preset_names() { return {"active", "active-large", "interactive", "smoke"}; }

}  // namespace ips
