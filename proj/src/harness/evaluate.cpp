#include "ips/harness/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ips/agents/ges.hpp"
#include "ips/agents/gnbv.hpp"
#include "ips/agents/ppo.hpp"
#include "ips/agents/random_agent.hpp"
#include "ips/harness/config.hpp"

namespace ips {

using nlohmann::json;

json MetricsReport::deterministic_json() const {
  return {{"agent", agent},
          {"config_digest", config_digest},
          {"episodes", episodes},
          {"successes", successes},
          {"success_rate", success_rate},
          {"no_target_episodes", no_target_episodes},
          {"no_target_success_rate", no_target_success_rate},
          {"mean_steps", mean_steps},
          {"found", found},
          {"no_target_found", no_target_found},
          {"false_terminations", false_terminations},
          {"timeouts", timeouts},
          {"mean_return", mean_return}};
}

json MetricsReport::to_json() const {
  json j = deterministic_json();
  j["mean_step_time"] = mean_step_time;
  j["mean_agent_step_time"] = mean_agent_step_time;
  j["mean_env_step_time"] = mean_env_step_time;
  j["total_wall_time"] = total_wall_time;
  return j;
}

std::string MetricsReport::table() const {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "agent                 %s\n"
                "episodes              %d\n"
                "success rate          %.4f (%d)\n"
                "  found               %d\n"
                "  no target           %d\n"
                "false terminations    %d\n"
                "timeouts              %d\n"
                "no-target success     %.4f of %d\n"
                "mean steps            %.2f\n"
                "mean return           %.2f\n"
                "step time (ms)        %.3f  (agent %.3f, env %.3f)\n"
                "config digest         %s\n",
                agent.c_str(), episodes, success_rate, successes, found, no_target_found, false_terminations,
                timeouts, no_target_success_rate, no_target_episodes, mean_steps, mean_return,
                1e3 * mean_step_time, 1e3 * mean_agent_step_time, 1e3 * mean_env_step_time, config_digest.c_str());
  return buf;
}

MetricsReport aggregate(const std::vector<EpisodeRecord>& records, const std::string& agent,
                        const std::string& digest) {
  if (records.empty()) throw ContractViolation("cannot aggregate zero episodes");
  MetricsReport m;
  m.agent = agent;
  m.config_digest = digest;
  m.episodes = static_cast<int>(records.size());
  long total_steps = 0;
  double agent_time = 0.0, env_time = 0.0, ret = 0.0;
  int no_target_ok = 0;
  for (const EpisodeRecord& r : records) {
    total_steps += r.step_count();
    agent_time += r.agent_time;
    env_time += r.env_time;
    m.total_wall_time += r.wall_time;
    ret += r.total_return;
    if (is_success(r.outcome)) ++m.successes;
    switch (r.outcome) {
      case Outcome::SuccessFound: ++m.found; break;
      case Outcome::SuccessNoTarget: ++m.no_target_found; break;
      case Outcome::FailureFalseTerminate: ++m.false_terminations; break;
      case Outcome::FailureTimeout: ++m.timeouts; break;
      case Outcome::Running: break;
    }
    if (!r.has_target) {
      ++m.no_target_episodes;
      if (is_success(r.outcome)) ++no_target_ok;
    }
  }
  const double n = static_cast<double>(m.episodes);
  m.success_rate = m.successes / n;
  m.no_target_success_rate = m.no_target_episodes > 0 ? static_cast<double>(no_target_ok) / m.no_target_episodes : 0.0;
  m.mean_steps = static_cast<double>(total_steps) / n;
  m.mean_return = ret / n;
  if (total_steps > 0) {
    m.mean_agent_step_time = agent_time / static_cast<double>(total_steps);
    m.mean_env_step_time = env_time / static_cast<double>(total_steps);
    m.mean_step_time = m.mean_agent_step_time + m.mean_env_step_time;
  }
  return m;
}

EvaluationResult evaluate(const EpisodeConfig& cfg, const Agent& agent, int episodes, std::uint64_t seed_base,
                          int workers) {
  if (episodes < 1) throw ContractViolation("evaluate needs at least one episode");
  cfg.validate();
  workers = std::clamp(workers, 1, episodes);
  std::vector<EpisodeRecord> records(static_cast<std::size_t>(episodes));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    std::unique_ptr<Agent> local = agent.clone();
    Env env;
    for (int i = next.fetch_add(1); i < episodes; i = next.fetch_add(1)) {
      try {
        const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
        records[static_cast<std::size_t>(i)] = run_episode(cfg, *local, seed, &env);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(episodes);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  EvaluationResult result;
  result.report = aggregate(records, agent.name(), config_digest(cfg));
  result.records = std::move(records);
  return result;
}

std::unique_ptr<Agent> make_agent(const std::string& name, const std::string& checkpoint) {
  if (name == "gnbv") return std::make_unique<GnbvAgent>();
  if (name == "ges") return std::make_unique<GesAgent>();
  if (name == "random") return std::make_unique<RandomAgent>();
  if (name == "ppo") {
    if (checkpoint.empty()) throw std::invalid_argument("the ppo agent needs --checkpoint");
    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + checkpoint);
    return std::make_unique<PpoAgent>(std::make_shared<const MlpPolicy>(MlpPolicy::load(in)));
  }
  throw std::invalid_argument("unknown agent: " + name);
}

}  // namespace ips
