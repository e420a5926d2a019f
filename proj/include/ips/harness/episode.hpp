#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ips/agents/agent.hpp"
#include "ips/env.hpp"

namespace ips {

struct StepRecord {
  int t = 0;  ///< 1-based step index
  Action action;
  double reward = 0.0;
  Outcome outcome = Outcome::Running;
  StateVector observation{};
  std::uint64_t rng_cursor = 0;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::string config_digest;
  EpisodeConfig config;
  std::string agent;
  StateVector initial_observation{};
  std::uint64_t initial_rng_cursor = 0;
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::Running;
  bool has_target = true;
  double total_return = 0.0;
  // Timing (seconds); excluded from determinism comparisons.
  double wall_time = 0.0;
  double agent_time = 0.0;
  double env_time = 0.0;

  int step_count() const { return static_cast<int>(steps.size()); }
};

/// Runs one episode to completion. `env` is reused across calls when given.
EpisodeRecord run_episode(const EpisodeConfig& cfg, Agent& agent, std::uint64_t seed, Env* env = nullptr);

/// JSON Lines: a header line (version, seed, config digest, config, agent,
/// initial observation), one line per step, then a summary line.
void write_jsonl(std::ostream& out, const EpisodeRecord& record);
EpisodeRecord read_jsonl(std::istream& in);

enum class ReplayStatus { Pass, Mismatch, Rejected };

struct ReplayResult {
  ReplayStatus status = ReplayStatus::Pass;
  int first_divergent_step = -1;  ///< 0 is the reset observation
  std::string message;
  bool ok() const { return status == ReplayStatus::Pass; }
};

/// Re-simulates the logged actions and compares every logged value bit for bit.
/// Rejects without simulating when the record's digest differs from `expected`'s.
ReplayResult replay(const EpisodeRecord& record, const EpisodeConfig& expected);
/// Replays against the configuration embedded in the record (after checking it matches its digest).
ReplayResult replay(const EpisodeRecord& record);

}  // namespace ips
