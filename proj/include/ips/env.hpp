#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ips/camera.hpp"
#include "ips/encoder.hpp"
#include "ips/rng.hpp"
#include "ips/scene.hpp"
#include "ips/tsdf.hpp"

namespace ips {

enum class Task { Active, Interactive };

struct RewardConfig {
  double time_penalty = 1.0;      ///< r_t
  double final_reward = 150.0;    ///< r_d
  /// Newly observed voxels worth the full exploration reward. Zero or less
  /// calibrates from one overview frame of an empty workspace.
  double kappa = 0.0;
  /// Ground-truth fraction of target voxels that must be detected for a found claim.
  double seen_threshold = 0.2;

  void validate() const;
  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct EpisodeConfig {
  SceneConfig scene;
  int horizon = 130;
  TsdfConfig tsdf;
  EncoderConfig encoder;
  RewardConfig reward;
  Task task = Task::Active;
  CameraIntrinsics camera;
  DetectionNoise noise;

  void validate() const;
  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

/// Translations in the yaw-projected gripper frame, rotations as increments.
struct Action {
  double dx = 0.0, dy = 0.0, dz = 0.0;
  double droll = 0.0, dyaw = 0.0;
  bool terminate = false;

  static Action stop() {
    Action a;
    a.terminate = true;
    return a;
  }
  friend bool operator==(const Action&, const Action&) = default;
};

Action clip_action(const Action& a);

enum class Outcome { Running, SuccessFound, SuccessNoTarget, FailureFalseTerminate, FailureTimeout };

std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);
inline bool is_success(Outcome o) { return o == Outcome::SuccessFound || o == Outcome::SuccessNoTarget; }

struct StepResult {
  StateVector observation{};
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::Running;
  std::size_t newly_observed = 0;
};

/// -r_t + min(r_t, r_t * newly / kappa)
double step_reward(std::size_t newly_observed, double kappa, double time_penalty);

/// Voxels newly observed by a single frame of an empty workspace seen from
/// its center at maximum wrist height.
double calibrate_kappa(const EpisodeConfig& cfg);

class Env {
 public:
  StateVector reset(const EpisodeConfig& cfg, std::uint64_t seed);
  StepResult step(const Action& action);

  const EpisodeConfig& config() const { return cfg_; }
  const SceneState& scene() const { return scene_; }
  const VoxelGrid& grid() const { return grid_; }
  const std::optional<std::vector<VoxelIndex>>& truth() const { return truth_; }
  const StateVector& observation() const { return obs_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  double kappa() const { return kappa_; }
  std::uint64_t seed() const { return seed_; }
  /// Draws consumed so far by the scene and sensor-noise streams.
  std::uint64_t rng_cursor() const { return scene_rng_.cursor() + noise_rng_.cursor(); }

 private:
  std::size_t sense();

  EpisodeConfig cfg_;
  std::optional<EpisodeConfig> calibrated_for_;
  double kappa_ = 1.0;
  std::uint64_t seed_ = 0;
  Rng scene_rng_{0};
  Rng noise_rng_{0};
  SceneState scene_;
  VoxelGrid grid_;
  std::optional<std::vector<VoxelIndex>> truth_;
  StateVector obs_{};
  int steps_ = 0;
  bool done_ = true;
};

std::string to_string(Task t);
Task task_from_string(const std::string& s);

}  // namespace ips
