#include "ips/env.hpp"

#include <algorithm>
#include <cmath>

namespace ips {

void RewardConfig::validate() const {
  if (!(time_penalty > 0.0) || !(final_reward > 0.0)) throw ContractViolation("reward magnitudes must be positive");
  if (!(seen_threshold > 0.0 && seen_threshold <= 1.0)) throw ContractViolation("seen threshold must be in (0, 1]");
}

void EpisodeConfig::validate() const {
  if (horizon <= 0) throw ContractViolation("horizon must be positive");
  scene.validate();
  tsdf.validate(scene.workspace);
  encoder.validate();
  reward.validate();
  camera.validate();
}

Action clip_action(const Action& a) {
  const double t = kMotionLimits.max_translation, r = kMotionLimits.max_rotation;
  auto clip = [](double v, double lim) { return std::isfinite(v) ? std::clamp(v, -lim, lim) : 0.0; };
  Action out = a;
  out.dx = clip(a.dx, t);
  out.dy = clip(a.dy, t);
  out.dz = clip(a.dz, t);
  out.droll = clip(a.droll, r);
  out.dyaw = clip(a.dyaw, r);
  return out;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::SuccessFound: return "success_found";
    case Outcome::SuccessNoTarget: return "success_no_target";
    case Outcome::FailureFalseTerminate: return "failure_false_terminate";
    case Outcome::FailureTimeout: return "failure_timeout";
  }
  return "running";
}

Outcome outcome_from_string(const std::string& s) {
  for (Outcome o : {Outcome::Running, Outcome::SuccessFound, Outcome::SuccessNoTarget, Outcome::FailureFalseTerminate,
                    Outcome::FailureTimeout})
    if (to_string(o) == s) return o;
  throw std::invalid_argument("unknown outcome: " + s);
}

std::string to_string(Task t) { return t == Task::Active ? "active" : "interactive"; }

Task task_from_string(const std::string& s) {
  if (s == "active") return Task::Active;
  if (s == "interactive") return Task::Interactive;
  throw std::invalid_argument("unknown task: " + s);
}

double step_reward(std::size_t newly_observed, double kappa, double time_penalty) {
  if (!(kappa > 0.0)) throw ContractViolation("kappa must be positive");
  return -time_penalty + std::min(time_penalty, time_penalty * static_cast<double>(newly_observed) / kappa);
}

double calibrate_kappa(const EpisodeConfig& cfg) {
  SceneState empty;
  empty.config = cfg.scene;
  const double side = cfg.scene.workspace.side_length;
  empty.gripper.position = {0.5 * side, 0.5 * side, max_gripper_height(cfg.scene)};
  VoxelGrid grid(make_grid_geometry(cfg.scene.workspace, cfg.tsdf), cfg.tsdf.truncation, cfg.tsdf.max_weight);
  const DepthImage depth = render_depth(empty, cfg.camera);
  DetectionImage none{cfg.camera.width, cfg.camera.height,
                      std::vector<float>(static_cast<std::size_t>(cfg.camera.width) * cfg.camera.height, 0.0f)};
  const std::size_t n = integrate(grid, depth, none, CameraPoseStamped::from_gripper(empty.gripper, cfg.camera));
  return std::max<double>(1.0, static_cast<double>(n));
}

StateVector Env::reset(const EpisodeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.reward.kappa > 0.0) {
    kappa_ = cfg.reward.kappa;
  } else if (!calibrated_for_ || !(*calibrated_for_ == cfg)) {
    kappa_ = calibrate_kappa(cfg);
    calibrated_for_ = cfg;
  }
  cfg_ = cfg;
  seed_ = seed;
  scene_rng_ = Rng(derive_seed(seed, 0));
  noise_rng_ = Rng(derive_seed(seed, 1));
  scene_ = generate_scene(cfg.scene, scene_rng_);
  grid_ = VoxelGrid(make_grid_geometry(cfg.scene.workspace, cfg.tsdf), cfg.tsdf.truncation, cfg.tsdf.max_weight);
  truth_ = target_truth(scene_, grid_.geometry());
  steps_ = 0;
  done_ = false;
  sense();
  return obs_;
}

std::size_t Env::sense() {
  const DepthImage depth = render_depth(scene_, cfg_.camera);
  const DetectionImage det = render_detection(scene_, depth, cfg_.camera, cfg_.noise, noise_rng_);
  const std::size_t newly = integrate(grid_, depth, det, CameraPoseStamped::from_gripper(scene_.gripper, cfg_.camera));
  obs_ = encode(grid_, scene_.gripper, cfg_.encoder);
  return newly;
}

StepResult Env::step(const Action& action) {
  if (done_) throw ContractViolation("step called on a finished episode");
  ++steps_;
  StepResult r;
  const RewardConfig& rw = cfg_.reward;
  if (action.terminate) {
    if (!truth_) {
      r.outcome = Outcome::SuccessNoTarget;
      r.reward = rw.final_reward;
    } else if (target_seen_fraction(grid_, *truth_, cfg_.tsdf.det_threshold) >= rw.seen_threshold) {
      r.outcome = Outcome::SuccessFound;
      r.reward = rw.final_reward;
    } else {
      r.outcome = Outcome::FailureFalseTerminate;
      r.reward = -rw.final_reward;
    }
  } else {
    const Action a = clip_action(action);
    const double c = std::cos(scene_.gripper.yaw), s = std::sin(scene_.gripper.yaw);
    const Vec3 world{c * a.dx - s * a.dy, s * a.dx + c * a.dy, a.dz};
    scene_ = step_gripper(scene_, world, a.droll, a.dyaw);
    truth_ = target_truth(scene_, grid_.geometry());
    r.newly_observed = sense();
    if (steps_ >= cfg_.horizon) {
      r.outcome = Outcome::FailureTimeout;
      r.reward = -rw.final_reward;
    } else {
      r.reward = step_reward(r.newly_observed, kappa_, rw.time_penalty);
    }
  }
  r.done = r.outcome != Outcome::Running;
  done_ = r.done;
  r.observation = obs_;
  return r;
}

}  // namespace ips
