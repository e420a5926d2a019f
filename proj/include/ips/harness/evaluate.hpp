#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ips/agents/agent.hpp"
#include "ips/harness/episode.hpp"

namespace ips {

struct MetricsReport {
  std::string agent;
  std::string config_digest;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  int no_target_episodes = 0;
  double no_target_success_rate = 0.0;  ///< 0 when there were no such episodes
  double mean_steps = 0.0;
  int found = 0, no_target_found = 0, false_terminations = 0, timeouts = 0;
  double mean_return = 0.0;
  // Timing; not part of the deterministic content.
  double mean_step_time = 0.0;  ///< (agent + env) compute per step
  double mean_agent_step_time = 0.0;
  double mean_env_step_time = 0.0;
  double total_wall_time = 0.0;

  /// Everything except timing.
  nlohmann::json deterministic_json() const;
  nlohmann::json to_json() const;
  std::string table() const;
};

MetricsReport aggregate(const std::vector<EpisodeRecord>& records, const std::string& agent,
                        const std::string& digest);

struct EvaluationResult {
  MetricsReport report;
  std::vector<EpisodeRecord> records;  ///< in seed order
};

/// Episodes for seeds seed_base .. seed_base + n - 1 spread over `workers`
/// threads, each with its own environment and agent clone.
EvaluationResult evaluate(const EpisodeConfig& cfg, const Agent& agent, int episodes, std::uint64_t seed_base,
                          int workers = 1);

/// "ppo" requires a checkpoint path; "gnbv", "ges" and "random" ignore it.
std::unique_ptr<Agent> make_agent(const std::string& name, const std::string& checkpoint = {});

}  // namespace ips
