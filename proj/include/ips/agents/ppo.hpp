#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ips/agents/agent.hpp"
#include "ips/agents/mlp.hpp"

namespace ips {

struct PpoConfig {
  std::size_t batch_size = 5000;
  std::size_t minibatch_size = 500;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 4;
  double learning_rate = 3e-4;
  double adam_epsilon = 1e-5;
  double max_grad_norm = 0.5;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  /// Rewards are multiplied by this before advantage estimation.
  double reward_scale = 0.01;
  double initial_log_std = -0.5;
  double terminate_bias = -2.0;

  void validate() const;
  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

struct RolloutBatch {
  std::vector<StateVector> states;
  std::vector<PolicySample> samples;
  std::vector<double> log_probs;
  std::vector<double> rewards;  ///< scaled
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  // Episodes that finished inside this batch (unscaled returns).
  std::vector<double> episode_returns;
  std::vector<int> episode_lengths;
  std::vector<std::uint8_t> episode_successes;

  std::size_t size() const { return states.size(); }
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation over a time-ordered step sequence. `dones[t]`
/// marks that step t ended its episode; `last_value` bootstraps the final step
/// when it did not.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda);

/// In-place zero-mean, unit-variance normalization; all zeros when the spread vanishes.
void normalize_advantages(std::vector<double>& adv);

/// Environment stepping state that persists across batches.
class RolloutWorker {
 public:
  RolloutWorker(EpisodeConfig cfg, std::function<std::uint64_t(std::uint64_t)> episode_seed);

  const Env& env() const { return env_; }
  std::uint64_t episodes_started() const { return episodes_; }

 private:
  friend RolloutBatch collect_rollouts(RolloutWorker&, const MlpPolicy&, std::size_t, const PpoConfig&, Rng&);
  EpisodeConfig cfg_;
  std::function<std::uint64_t(std::uint64_t)> episode_seed_;
  Env env_;
  std::uint64_t episodes_ = 0;
  bool needs_reset_ = true;
  double episode_return_ = 0.0;
  int episode_length_ = 0;
};

RolloutBatch collect_rollouts(RolloutWorker& worker, const MlpPolicy& policy, std::size_t steps, const PpoConfig& cfg,
                              Rng& rng);

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Mean clipped-surrogate loss over `indices`:
///   total = policy_loss + value_coef * value_loss - entropy_coef * entropy
/// with value_loss = 0.5 (V - R)^2. Adds d total / d params into `grad` when given.
LossStats ppo_loss(const MlpPolicy& policy, const RolloutBatch& batch, std::span<const std::size_t> indices,
                   const PpoConfig& cfg, std::vector<double>* grad);

class Adam {
 public:
  Adam() = default;
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad, double lr, double eps, double beta1 = 0.9,
            double beta2 = 0.999);
  std::uint64_t steps() const { return t_; }

 private:
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

struct UpdateStats {
  LossStats loss;  ///< averaged over minibatches
  double grad_norm = 0.0;
  int minibatches = 0;
  bool aborted = false;
};

/// Epochs of shuffled minibatch Adam steps on the batch. A non-finite loss
/// restores the pre-update parameters and sets `aborted`.
UpdateStats ppo_update(MlpPolicy& policy, const RolloutBatch& batch, const PpoConfig& cfg, Adam& adam, Rng& rng);

class PpoAgent final : public Agent {
 public:
  explicit PpoAgent(std::shared_ptr<const MlpPolicy> policy, bool stochastic = false);
  std::string name() const override { return "ppo"; }
  void begin_episode(const Env& env, std::uint64_t seed) override;
  Action act(const Env& env) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<PpoAgent>(policy_, stochastic_); }

 private:
  std::shared_ptr<const MlpPolicy> policy_;
  bool stochastic_;
  Rng rng_{0};
};

struct TrainConfig {
  EpisodeConfig env;
  PpoConfig ppo;
  std::size_t total_steps = 300000;
  std::uint64_t seed = 1;
  int hidden = 200;
  std::string checkpoint_path;  ///< empty: no checkpoint
  std::string metrics_path;     ///< empty: no CSV
};

struct IterationStats {
  int iteration = 0;
  std::size_t env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  int episodes = 0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  MlpPolicy policy;
  std::vector<IterationStats> iterations;
  /// Per finished episode, in completion order.
  std::vector<double> episode_returns;
  std::vector<std::uint8_t> episode_successes;
};

TrainResult train_ppo(const TrainConfig& cfg, const std::function<void(const IterationStats&)>& progress = {});

}  // namespace ips
