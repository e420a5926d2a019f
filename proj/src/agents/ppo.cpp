#include "ips/agents/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ips {

void PpoConfig::validate() const {
  if (batch_size == 0 || minibatch_size == 0 || batch_size % minibatch_size != 0)
    throw ContractViolation("minibatch size must divide the batch size");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractViolation("gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ContractViolation("lambda must be in [0, 1]");
  if (!(clip > 0.0) || epochs <= 0 || learning_rate < 0.0) throw ContractViolation("invalid optimizer settings");
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double last_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ContractViolation("gae inputs differ in length");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = last_value;
  for (std::size_t i = n; i-- > 0;) {
    const double keep = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * keep - values[i];
    next_adv = delta + gamma * lambda * keep * next_adv;
    r.advantages[i] = next_adv;
    r.returns[i] = next_adv + values[i];
    next_value = values[i];
  }
  return r;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  if (sd < 1e-8) {
    std::fill(adv.begin(), adv.end(), 0.0);
    return;
  }
  for (double& a : adv) a = (a - mean) / sd;
}

RolloutWorker::RolloutWorker(EpisodeConfig cfg, std::function<std::uint64_t(std::uint64_t)> episode_seed)
    : cfg_(std::move(cfg)), episode_seed_(std::move(episode_seed)) {}

RolloutBatch collect_rollouts(RolloutWorker& w, const MlpPolicy& policy, std::size_t steps, const PpoConfig& cfg,
                              Rng& rng) {
  RolloutBatch b;
  b.states.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    while (w.needs_reset_) {
      try {
        w.env_.reset(w.cfg_, w.episode_seed_(w.episodes_++));
        w.needs_reset_ = false;
      } catch (const GenerationError&) {
        // Unplaceable scene: move on to the next seed.
      }
      w.episode_return_ = 0.0;
      w.episode_length_ = 0;
    }
    const StateVector obs = w.env_.observation();
    const MlpPolicy::Output out = policy.forward(obs);
    const PolicySample s = sample(out, rng);
    const StepResult r = w.env_.step(to_action(s));

    b.states.push_back(obs);
    b.samples.push_back(s);
    b.log_probs.push_back(log_prob(out, s));
    b.rewards.push_back(cfg.reward_scale * r.reward);
    b.values.push_back(out.value);
    b.dones.push_back(r.done ? 1 : 0);
    w.episode_return_ += r.reward;
    ++w.episode_length_;
    if (r.done) {
      b.episode_returns.push_back(w.episode_return_);
      b.episode_lengths.push_back(w.episode_length_);
      b.episode_successes.push_back(is_success(r.outcome) ? 1 : 0);
      w.needs_reset_ = true;
    }
  }
  const double last_value = w.needs_reset_ ? 0.0 : policy.forward(w.env_.observation()).value;
  GaeResult g = compute_gae(b.rewards, b.values, b.dones, last_value, cfg.gamma, cfg.gae_lambda);
  b.returns = std::move(g.returns);
  b.advantages = std::move(g.advantages);
  normalize_advantages(b.advantages);
  return b;
}

LossStats ppo_loss(const MlpPolicy& policy, const RolloutBatch& batch, std::span<const std::size_t> indices,
                   const PpoConfig& cfg, std::vector<double>* grad) {
  LossStats st;
  if (indices.empty()) return st;
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  MlpPolicy::Trace trace;
  std::size_t clipped = 0;
  for (std::size_t idx : indices) {
    const StateVector& x = batch.states[idx];
    const PolicySample& s = batch.samples[idx];
    const MlpPolicy::Output out = policy.forward(x, grad ? &trace : nullptr);
    const double lp = log_prob(out, s);
    const double ratio = std::exp(lp - batch.log_probs[idx]);
    const double adv = batch.advantages[idx];
    const double s1 = ratio * adv;
    const double s2 = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    const double ent = entropy(out);
    const double err = out.value - batch.returns[idx];

    st.policy_loss += -std::min(s1, s2);
    st.value_loss += 0.5 * err * err;
    st.entropy += ent;
    st.approx_kl += batch.log_probs[idx] - lp;
    if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;

    if (grad) {
      const double d_lp = s1 <= s2 ? -adv * ratio : 0.0;
      std::array<double, MlpPolicy::kHeadSize> d_head{};
      std::array<double, kActionDims> d_log_std{};
      for (int i = 0; i < kActionDims; ++i) {
        const double inv_var = std::exp(-2.0 * out.log_std[i]);
        const double diff = s.u[i] - out.mean[i];
        d_head[i] = inv_n * d_lp * diff * inv_var;
        d_log_std[i] = inv_n * (d_lp * (diff * diff * inv_var - 1.0) - cfg.entropy_coef);
      }
      const double p = terminate_probability(out);
      const double d_ent_logit = -p * (1.0 - p) * out.terminate_logit;
      d_head[kActionDims] = inv_n * (d_lp * ((s.terminate ? 1.0 : 0.0) - p) - cfg.entropy_coef * d_ent_logit);
      d_head[kActionDims + 1] = inv_n * cfg.value_coef * err;
      policy.backward(x, trace, d_head, d_log_std, *grad);
    }
  }
  st.policy_loss *= inv_n;
  st.value_loss *= inv_n;
  st.entropy *= inv_n;
  st.approx_kl *= inv_n;
  st.clip_fraction = static_cast<double>(clipped) * inv_n;
  st.total = st.policy_loss + cfg.value_coef * st.value_loss - cfg.entropy_coef * st.entropy;
  return st;
}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr, double eps, double beta1,
                double beta2) {
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
}

UpdateStats ppo_update(MlpPolicy& policy, const RolloutBatch& batch, const PpoConfig& cfg, Adam& adam, Rng& rng) {
  cfg.validate();
  UpdateStats st;
  const std::size_t n = batch.size();
  if (n == 0) return st;
  const std::vector<double> backup(policy.parameters().begin(), policy.parameters().end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(policy.parameter_count());
  const std::size_t mb = std::min(cfg.minibatch_size, n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start + mb <= n; start += mb) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const LossStats ls = ppo_loss(policy, batch, std::span(order).subspan(start, mb), cfg, &grad);
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(ls.total) || !std::isfinite(norm)) {
        std::copy(backup.begin(), backup.end(), policy.parameters().begin());
        st.aborted = true;
        return st;
      }
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
        const double scale = cfg.max_grad_norm / norm;
        for (double& g : grad) g *= scale;
      }
      adam.step(policy.parameters(), grad, cfg.learning_rate, cfg.adam_epsilon);
      policy.clamp_log_std();

      st.loss.policy_loss += ls.policy_loss;
      st.loss.value_loss += ls.value_loss;
      st.loss.entropy += ls.entropy;
      st.loss.total += ls.total;
      st.loss.clip_fraction += ls.clip_fraction;
      st.loss.approx_kl += ls.approx_kl;
      st.grad_norm += norm;
      ++st.minibatches;
    }
  }
  if (st.minibatches > 0) {
    const double k = 1.0 / st.minibatches;
    st.loss.policy_loss *= k;
    st.loss.value_loss *= k;
    st.loss.entropy *= k;
    st.loss.total *= k;
    st.loss.clip_fraction *= k;
    st.loss.approx_kl *= k;
    st.grad_norm *= k;
  }
  return st;
}

PpoAgent::PpoAgent(std::shared_ptr<const MlpPolicy> policy, bool stochastic)
    : policy_(std::move(policy)), stochastic_(stochastic) {
  if (!policy_) throw ContractViolation("ppo agent needs a policy");
}

void PpoAgent::begin_episode(const Env&, std::uint64_t seed) { rng_ = Rng(derive_seed(seed, 3)); }

Action PpoAgent::act(const Env& env) {
  const MlpPolicy::Output out = policy_->forward(env.observation());
  return to_action(stochastic_ ? sample(out, rng_) : mode(out));
}

TrainResult train_ppo(const TrainConfig& cfg, const std::function<void(const IterationStats&)>& progress) {
  cfg.ppo.validate();
  cfg.env.validate();
  Rng rng(derive_seed(cfg.seed, 7));
  TrainResult result{MlpPolicy(kStateSize, cfg.hidden), {}, {}, {}};
  result.policy.initialize(rng, cfg.ppo.initial_log_std, cfg.ppo.terminate_bias);
  Adam adam(result.policy.parameter_count());
  const std::uint64_t seed = cfg.seed;
  RolloutWorker worker(cfg.env, [seed](std::uint64_t k) { return derive_seed(seed, 1000 + k); });

  std::ofstream csv;
  if (!cfg.metrics_path.empty()) {
    csv.open(cfg.metrics_path);
    if (!csv) throw std::runtime_error("cannot write " + cfg.metrics_path);
    csv << "iteration,env_steps,mean_return,success_rate,episodes,entropy,clip_fraction\n";
  }

  const std::size_t iterations = std::max<std::size_t>(1, cfg.total_steps / cfg.ppo.batch_size);
  std::size_t env_steps = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const RolloutBatch batch = collect_rollouts(worker, result.policy, cfg.ppo.batch_size, cfg.ppo, rng);
    env_steps += batch.size();
    const UpdateStats up = ppo_update(result.policy, batch, cfg.ppo, adam, rng);

    IterationStats s;
    s.iteration = static_cast<int>(it);
    s.env_steps = env_steps;
    s.episodes = static_cast<int>(batch.episode_returns.size());
    if (s.episodes > 0) {
      s.mean_return = std::accumulate(batch.episode_returns.begin(), batch.episode_returns.end(), 0.0) / s.episodes;
      s.success_rate =
          static_cast<double>(std::accumulate(batch.episode_successes.begin(), batch.episode_successes.end(), 0)) /
          s.episodes;
    }
    s.entropy = up.loss.entropy;
    s.clip_fraction = up.loss.clip_fraction;
    result.iterations.push_back(s);
    result.episode_returns.insert(result.episode_returns.end(), batch.episode_returns.begin(),
                                  batch.episode_returns.end());
    result.episode_successes.insert(result.episode_successes.end(), batch.episode_successes.begin(),
                                    batch.episode_successes.end());
    if (csv) {
      csv << s.iteration << ',' << s.env_steps << ',' << s.mean_return << ',' << s.success_rate << ',' << s.episodes
          << ',' << s.entropy << ',' << s.clip_fraction << '\n';
      csv.flush();
    }
    if (!cfg.checkpoint_path.empty()) {
      std::ofstream out(cfg.checkpoint_path, std::ios::binary);
      result.policy.save(out);
    }
    if (progress) progress(s);
  }
  return result;
}

}  // namespace ips
